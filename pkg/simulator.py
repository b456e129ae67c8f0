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
from dataclasses import dataclass, field, replace
from typing import Dict

import numpy as np

from baselines import baseline_place, greedy_place
from collective import build_tree, optimize
from costs import CostBreakdown, RoundContext, total_local_cost
from model import InvariantViolation
from objectives import INCENTIVE, MIN_VAR, Objective
from plans import CapacityTable, feasibility_check, generate_all_plans, host_loads

MERA = 'mera'
BASELINE = 'baseline'
GREEDY = 'greedy'
STRATEGIES = (MERA, BASELINE, GREEDY)


@dataclass
class RoundMetrics:
    """Outcome of one strategy in one round"""
    round_index: int
    strategy: str
    cost: CostBreakdown
    variance: float
    incentive_rmse: float
    cpu_utilization: Dict[str, float]
    ram_utilization: Dict[str, float]
    cloud_spill: float
    services: int
    placement: Dict[str, str] = field(repr=False)
    iterations: list = field(default_factory=list, repr=False)

    @property
    def violation_share(self):
        total = self.cost.total
        return self.cost.violation / total if total > 0 else 0.0

    @property
    def combined_cost(self):
        return self.iterations[-1].combined_cost if self.iterations else float('nan')

    def rows(self, **keys):
        """Tidy metric rows; ``keys`` label every row (suite, regime, seed, lambda)"""
        values = {f"cost_{name}": value for name, value in self.cost.as_dict().items()}
        values.update({
            'variance': self.variance,
            'incentive_rmse': self.incentive_rmse,
            'cloud_spill': self.cloud_spill,
            'violation_share': self.violation_share,
            'services': float(self.services),
            'iterations': float(max(0, len(self.iterations) - 1)),
        })
        if self.iterations:
            values['combined_cost'] = self.combined_cost
            values['mean_local_cost'] = self.iterations[-1].local_cost
            values['global_cost'] = self.iterations[-1].global_cost
        for node_id, share in self.cpu_utilization.items():
            values[f"cpu_utilization:{node_id}"] = share
        for node_id, share in self.ram_utilization.items():
            values[f"ram_utilization:{node_id}"] = share
        return [dict(keys, round=self.round_index, strategy=self.strategy, metric=name, value=value)
                for name, value in values.items()]

    def iteration_rows(self, **keys):
        return [dict(keys, round=self.round_index, strategy=self.strategy, iteration=record.iteration,
                     combined_cost=record.combined_cost, local_cost=record.local_cost,
                     global_cost=record.global_cost)
                for record in self.iterations]


class Simulator:
    """Runs one strategy over the round sequence of a loaded scenario"""

    def __init__(self, loaded, strategy, lam=None, objective=None, seed=None, workers=1,
                 topology=None, active_nodes=None):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
        self.logger = logging.getLogger('Simulator')
        self.loaded = loaded
        self.config = loaded.config
        self.strategy = strategy
        self.lam = self.config.lambdas[0] if lam is None else lam
        self.objective_kind = objective or self.config.objective
        self.seed = self.config.seed if seed is None else seed
        self.workers = workers
        self.topology = topology or loaded.topology
        self.active_nodes = active_nodes

    def _context(self, state):
        return RoundContext(self.topology, self.loaded.pricebook, state,
                            startup_delay=self.config.container_startup_delay,
                            fallback_ap=self.config.fallback_ap,
                            utilization_cap=self.config.utilization_cap)

    def _select(self, ctx, table, objective):
        if self.strategy == BASELINE:
            return baseline_place(ctx, table), []
        if self.strategy == GREEDY:
            return greedy_place(ctx, table), []

        round_seed = self.seed * 1000003 + ctx.round_index
        plans = generate_all_plans(ctx, count=self.config.plans_per_agent, seed=round_seed,
                                   workers=self.workers, table=table, objective=objective,
                                   hop_radius=self.config.hop_radius)
        overlay = build_tree(plans, self.config.branching, round_seed)
        result = optimize(plans, overlay, lam=self.lam, objective=objective,
                          max_iterations=self.config.max_iterations, table=table, workers=self.workers)
        return result.selected_plans(plans), result.records

    def _check(self, ctx, table, assignment):
        violations = feasibility_check(assignment, ctx.topology, ctx.services, table=table)
        missing = set(ctx.service_ids) - set(assignment)
        violations.extend(f"{service_id}: not placed" for service_id in sorted(missing))
        if violations:
            for violation in violations:
                self.logger.error(f"Round {ctx.round_index} {self.strategy}: {violation}")
            raise InvariantViolation(f"{len(violations)} feasibility violations in round {ctx.round_index}")

    def step(self, state):
        ctx = self._context(state)
        table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
        objective = Objective(self.objective_kind, ctx.topology, ctx.active_nodes)

        iterations = []
        if ctx.service_ids:
            selected, iterations = self._select(ctx, table, objective)
            assignment = {}
            for plan in selected.values():
                assignment.update(plan.mapping)
        else:
            assignment = {}
        self._check(ctx, table, assignment)

        cost = total_local_cost(assignment, ctx) if assignment else CostBreakdown()
        g = host_loads(assignment, table, ctx.services).utilization(table)
        variance = Objective(MIN_VAR, ctx.topology, ctx.active_nodes)(g)
        incentive = Objective(INCENTIVE, ctx.topology, ctx.active_nodes)(g)
        shares = g.reshape(-1, 2)
        in_use = [i for i, node_id in enumerate(table.node_ids) if table.active[i] and table.bounded[i]]
        cloud_id = ctx.cloud_id
        spill = (sum(1 for node_id in assignment.values() if node_id == cloud_id) / len(assignment)
                 if assignment else 0.0)
        return RoundMetrics(
            round_index=state.round_index, strategy=self.strategy, cost=cost, variance=variance,
            incentive_rmse=incentive,
            cpu_utilization={table.node_ids[i]: float(shares[i, 0]) for i in in_use},
            ram_utilization={table.node_ids[i]: float(shares[i, 1]) for i in in_use},
            cloud_spill=spill, services=len(ctx.service_ids), placement=assignment, iterations=iterations)

    def run(self, rounds=None):
        """Metrics of every round, threading the placement into the next round"""
        rounds = self.loaded.rounds if rounds is None else rounds
        previous = {}
        results = []
        for state in rounds:
            active = self.active_nodes if self.active_nodes is not None else frozenset(
                node.id for node in self.topology.nodes if node.active)
            state = replace(state, previous_placement=dict(previous), active_nodes=frozenset(active))
            metrics = self.step(state)
            previous = metrics.placement
            results.append(metrics)
            self.logger.info(f"Round {state.round_index} {self.strategy}: {metrics.services} services, "
                             f"cost {metrics.cost.total:.6g}, variance {metrics.variance:.4g}, "
                             f"cloud spill {metrics.cloud_spill:.2%}")
        return results


def mean_node_utilization(results):
    """Per-node CPU utilization averaged over rounds"""
    totals = {}
    for metrics in results:
        for node_id, share in metrics.cpu_utilization.items():
            totals.setdefault(node_id, []).append(share)
    return {node_id: float(np.mean(values)) for node_id, values in sorted(totals.items())}
