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

"""System-wide objectives over utilization vectors and the weighted combined cost.

A utilization vector holds, per node in node-id order, the CPU share followed by
the RAM share, i.e. [cpu_0, ram_0, cpu_1, ram_1, ...].
"""

import math
from dataclasses import dataclass

import numpy as np

MIN_VAR = 'min-var'
INCENTIVE = 'incentive'
OBJECTIVES = (MIN_VAR, INCENTIVE)


def as_matrix(g, mask=None):
    """(nodes, 2) view of a utilization vector restricted to the masked nodes"""
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size % 2:
        raise ValueError(f"utilization vector must be flat with even length, got shape {g.shape}")
    matrix = g.reshape(-1, 2)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.size != matrix.shape[0]:
            raise ValueError(f"mask covers {mask.size} nodes, vector {matrix.shape[0]}")
        matrix = matrix[mask]
    return matrix


def variance_objective(g, mask=None):
    """Root of the mean squared deviation of CPU and RAM shares from their per-dimension means"""
    matrix = as_matrix(g, mask)
    if matrix.shape[0] == 0:
        return 0.0
    deviations = matrix - matrix.mean(axis=0)
    return float(np.sqrt(np.sum(deviations ** 2) / matrix.size))


def incentive_objective(g, target, mask=None):
    """RMSE between utilization shares and renewable targets"""
    g = np.asarray(g, dtype=float)
    target = np.asarray(target, dtype=float)
    if g.shape != target.shape:
        raise ValueError(f"dimension mismatch: utilization {g.shape}, target {target.shape}")
    matrix = as_matrix(g, mask)
    goal = as_matrix(target, mask)
    if matrix.shape[0] == 0:
        return 0.0
    return float(np.sqrt(np.sum((matrix - goal) ** 2) / matrix.size))


def incentive_target(topology):
    """Renewable ratio of each node, repeated for its CPU and RAM positions"""
    return np.repeat([node.renewable_ratio for node in topology.nodes], 2).astype(float)


def active_mask(topology, active_ids=None):
    return np.array([node.active and (active_ids is None or node.id in active_ids or node.is_cloud)
                     for node in topology.nodes], dtype=bool)


class Objective:
    """Global objective bound to a topology's node order and active set"""

    def __init__(self, kind, topology, active_ids=None):
        if kind not in OBJECTIVES:
            raise ValueError(f"unknown objective {kind!r}, expected one of {OBJECTIVES}")
        self.kind = kind
        self.mask = active_mask(topology, active_ids)
        self.target = incentive_target(topology) if kind == INCENTIVE else None
        self.dimension = 2 * len(topology.nodes)

    def __call__(self, g):
        if self.kind == MIN_VAR:
            return variance_objective(g, self.mask)
        return incentive_objective(g, self.target, self.mask)

    def pressure(self, j, cpu_share):
        """How far node j sits above where the objective wants it, given its CPU share"""
        if self.kind == MIN_VAR:
            return cpu_share
        return cpu_share - self.target[2 * j]


@dataclass(frozen=True)
class Normalizer:
    """Min-max scaling of local and global costs, fixed for one round"""
    local_min: float = 0.0
    local_range: float = 1.0
    global_min: float = 0.0
    global_range: float = 1.0

    @staticmethod
    def _range(low, high):
        spread = high - low
        if not math.isfinite(spread) or spread <= 0:
            return 1.0
        return spread

    @classmethod
    def fit(cls, local_samples, global_samples):
        local = [value for value in local_samples if math.isfinite(value)]
        glob = [value for value in global_samples if math.isfinite(value)]
        local_min = min(local) if local else 0.0
        global_min = min(glob) if glob else 0.0
        return cls(
            local_min=local_min,
            local_range=cls._range(local_min, max(local) if local else local_min),
            global_min=global_min,
            global_range=cls._range(global_min, max(glob) if glob else global_min),
        )

    def local(self, value):
        return (value - self.local_min) / self.local_range

    def global_(self, value):
        return (value - self.global_min) / self.global_range


def combined_cost(local_costs, g, lam, normalizer, objective):
    """lambda * normalized mean local cost + (1 - lambda) * normalized global objective"""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda {lam} outside [0, 1]")
    local_costs = list(local_costs)
    mean_local = sum(local_costs) / len(local_costs) if local_costs else 0.0
    return weighted(normalizer.local(mean_local), normalizer.global_(objective(g)), lam)


def weighted(local_hat, global_hat, lam):
    return lam * local_hat + (1.0 - lam) * global_hat
