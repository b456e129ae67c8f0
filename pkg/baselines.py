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

"""Comparison strategies: local-or-cloud placement and cost-sorted First Fit."""

import logging

from model import InfeasibleScenarioError
from plans import CapacityTable, HostCostCache, add_load, build_plan, fits, new_loads

logger = logging.getLogger(__name__)


def receiving_fog(ctx, service_id):
    """Fog node colocated with the vehicle's dominant AP, or the nearest active one"""
    return ctx.receivers.get(service_id)


def _table(ctx, table):
    if table is None:
        return CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
    return table


def plans_from_assignment(ctx, assignment, table):
    """Split a placement into one evaluated plan per receiving agent"""
    costs = HostCostCache(ctx)
    owners = {}
    for service_id, node_id in sorted(assignment.items()):
        owner = receiving_fog(ctx, service_id) or ctx.cloud_id
        owners.setdefault(owner, {})[service_id] = node_id
    return {owner: build_plan(owner, mapping, ctx, table, costs) for owner, mapping in sorted(owners.items())}


def baseline_assignment(ctx, table=None):
    table = _table(ctx, table)
    cloud_id = ctx.cloud_id
    loads = new_loads(table)
    assignment = {}
    spilled = 0
    for service_id in ctx.service_ids:
        service = ctx.services[service_id]
        receiver = receiving_fog(ctx, service_id)
        if receiver is not None and service_id not in ctx.cloud_only:
            j = table.index[receiver]
            if fits(table, loads, j, service):
                add_load(loads, j, service)
                assignment[service_id] = receiver
                continue
        if cloud_id is None:
            raise InfeasibleScenarioError(f"{service_id} does not fit on {receiver} and there is no cloud")
        assignment[service_id] = cloud_id
        spilled += 1
    logger.debug(f"Baseline round {ctx.round_index}: {spilled} of {len(assignment)} services forwarded to cloud")
    return assignment


def baseline_place(ctx, table=None):
    """Receiving fog node when it still has room, otherwise the cloud; services in id order"""
    table = _table(ctx, table)
    return plans_from_assignment(ctx, baseline_assignment(ctx, table), table)


def greedy_assignment(ctx, table=None):
    table = _table(ctx, table)
    costs = HostCostCache(ctx)
    loads = new_loads(table)
    hosted = {}
    assignment = {}
    hosts = [node.id for node in ctx.topology.nodes
             if node.is_cloud or node.id in ctx.active_nodes]
    for service_id in ctx.service_ids:
        service = ctx.services[service_id]
        candidates = [ctx.cloud_id] if service_id in ctx.cloud_only else hosts
        ranked = []
        for node_id in candidates:
            if node_id is None:
                continue
            j = table.index[node_id]
            if not fits(table, loads, j, service):
                continue
            ranked.append((costs.marginal(node_id, hosted.get(node_id, []), service_id), node_id))
        if not ranked:
            raise InfeasibleScenarioError(f"No server with adequate capacity for {service_id}")
        ranked.sort()
        choice = ranked[0][1]
        add_load(loads, table.index[choice], service)
        hosted.setdefault(choice, []).append(service_id)
        assignment[service_id] = choice
    return assignment


def greedy_place(ctx, table=None):
    """First Fit over servers sorted by ascending marginal cost, ties by node id"""
    table = _table(ctx, table)
    return plans_from_assignment(ctx, greedy_assignment(ctx, table), table)
