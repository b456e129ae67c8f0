#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# Copyright (C) 2025 fogplace contributors
#
# This file is part of fogplace.
#
# fogplace is free software: you can redistribute it
# and/or modify it under the terms of the GNU General Public License
# as published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#

import logging
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet

import numpy as np


@dataclass(frozen=True)
class CapacityPlan:
    active: FrozenSet[str]
    capacities: Dict[str, float]     # MIPS per active fog node
    topology: object                 # topology with capacities scaled and the rest deactivated

    @property
    def aggregate(self):
        return sum(self.capacities.values())


def aggregate_demand(services):
    """Current round's total instruction arrival rate in MI/s"""
    return sum(service.cpu_rate for service in services)


def plan_capacity(demand, topology, ratio, active_count, seed=0):
    """Activate a seeded sample of fog nodes sized to ratio x demand

    Only processing is scaled, through the per-unit rate, in proportion to
    each sampled node's original capacity.
    """
    logger = logging.getLogger(__name__)
    fog = [node for node in topology.fog_nodes]
    if active_count <= 0:
        raise ValueError(f"active node count must be positive, got {active_count}")
    if active_count > len(fog):
        raise ValueError(f"cannot activate {active_count} of {len(fog)} fog nodes")
    if demand <= 0:
        raise ValueError(f"demand must be positive, got {demand}")
    if ratio <= 0:
        raise ValueError(f"capacity ratio must be positive, got {ratio}")

    rng = np.random.default_rng(seed)
    picked = sorted(fog[i].id for i in rng.choice(len(fog), size=active_count, replace=False))
    original = sum(topology.nodes_by_id[node_id].cpu_capacity for node_id in picked)
    scale = ratio * demand / original

    replacements = {}
    capacities = {}
    for node in fog:
        if node.id in picked:
            scaled = replace(node, unit_rate=node.unit_rate * scale,
                             cpu_capacity=node.cpu_capacity * scale, active=True)
            capacities[node.id] = scaled.cpu_capacity
        else:
            scaled = replace(node, active=False)
        replacements[node.id] = scaled

    logger.debug(f"Activated {active_count} fog nodes at ratio {ratio}: "
                 f"{sum(capacities.values()):.6g} MIPS for {demand:.6g} MI/s demand")
    return CapacityPlan(active=frozenset(picked), capacities=capacities,
                        topology=topology.with_nodes(replacements))
