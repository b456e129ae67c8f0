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

"""Cooperative plan selection over a tree overlay of fog agents.

Each iteration walks the tree leaves to root. Agents of one level propose the
plan minimizing the combined cost against the current aggregate of all other
agents; proposals are applied one by one and kept only if the combined cost of
the joint selection does not increase. The root then broadcasts the global
plan for the next iteration.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from scipy import stats

from config import SIMULATION_CONFIG
from model import InfeasibleScenarioError, InvariantViolation
from objectives import Normalizer, weighted
from plans import HostLoad, PlacementPlan, loads_feasible


@dataclass(frozen=True)
class TreeOverlay:
    order: tuple                   # agents in heap layout, root first
    parent: Dict[str, str]
    children: Dict[str, tuple]
    depth: Dict[str, int]

    @property
    def root(self):
        return self.order[0]

    @property
    def height(self):
        return max(self.depth.values())

    def levels(self):
        """Agents grouped by depth, deepest level first, ids sorted within a level"""
        height = self.height
        return [sorted(agent for agent, d in self.depth.items() if d == level)
                for level in range(height, -1, -1)]


def build_tree(agents, branching=None, seed=0):
    """Balanced tree over the agents sorted by id and shuffled by seed

    Agents fill the tree in heap order, so the height is floor(log_b n) for n
    agents. For b = 2 and n a power of two this equals ceil(log2 n).
    """
    if branching is None:
        branching = SIMULATION_CONFIG['branching']
    if branching < 1:
        raise ValueError(f"branching factor must be at least 1, got {branching}")
    agents = sorted(agents)
    if not agents:
        raise ValueError("cannot build a tree without agents")
    rng = np.random.default_rng(seed)
    order = tuple(agents[i] for i in rng.permutation(len(agents)))

    parent = {}
    children = {agent: [] for agent in order}
    depth = {order[0]: 0}
    for position in range(1, len(order)):
        up = order[(position - 1) // branching]
        parent[order[position]] = up
        children[up].append(order[position])
        depth[order[position]] = depth[up] + 1
    return TreeOverlay(order=order, parent=parent,
                       children={agent: tuple(kids) for agent, kids in children.items()},
                       depth=depth)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    global_plan: np.ndarray = field(repr=False)
    combined_cost: float
    selections: Dict[str, int]
    local_cost: float = 0.0
    global_cost: float = 0.0


@dataclass
class OptimizationResult:
    selections: Dict[str, int]
    records: List[IterationRecord]
    normalizer: Normalizer
    evaluations: int = 0

    @property
    def final(self):
        return self.records[-1]

    def selected_plans(self, plans):
        return {agent: plans[agent][index] for agent, index in self.selections.items()}


class _Stack:
    """Per-agent arrays of one plan attribute, for sums excluding a single agent"""

    def __init__(self, agents, plans, chosen):
        self.agents = agents
        self.row = {agent: i for i, agent in enumerate(agents)}
        self.plans = plans
        self.utilization = np.array([plans[a][chosen[a]].utilization for a in agents], dtype=float)
        self.local = np.array([plans[a][chosen[a]].local_cost for a in agents], dtype=float)
        self.loads = [plans[a][chosen[a]].loads for a in agents]

    def set(self, agent, plan):
        i = self.row[agent]
        self.utilization[i] = plan.utilization
        self.local[i] = plan.local_cost
        self.loads[i] = plan.loads

    def others(self, agent):
        i = self.row[agent]
        mask = np.ones(len(self.agents), dtype=bool)
        mask[i] = False
        g = self.utilization[mask].sum(axis=0)
        local = float(self.local[mask].sum())
        return g, local, _sum_loads(self.loads[:i] + self.loads[i + 1:], self.utilization.shape[1] // 2)

    def global_plan(self):
        return self.utilization.sum(axis=0)

    def total_loads(self):
        return _sum_loads(self.loads, self.utilization.shape[1] // 2)


def _sum_loads(loads, size):
    total = HostLoad.empty(size)
    for load in loads:
        total = total + load
    return total


class CollectiveOptimizer:
    """Iterative cooperative selection of one plan per agent"""

    def __init__(self, plans, overlay, lam=None, objective=None, max_iterations=None,
                 table=None, workers=1, stop_when_stable=True):
        self.logger = logging.getLogger('CollectiveOptimizer')
        self.plans = plans
        self.overlay = overlay
        self.lam = SIMULATION_CONFIG['default_lambda'] if lam is None else lam
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda {self.lam} outside [0, 1]")
        self.objective = objective
        self.max_iterations = SIMULATION_CONFIG['max_iterations'] if max_iterations is None else max_iterations
        if self.max_iterations < 0:
            raise ValueError(f"max_iterations must be non-negative, got {self.max_iterations}")
        self.table = table
        self.workers = max(1, workers)
        self.stop_when_stable = stop_when_stable
        self.agents = sorted(plans)
        self.evaluations = 0

        missing = set(overlay.order) ^ set(self.agents)
        if missing:
            raise ValueError(f"overlay and plan agents differ: {sorted(missing)}")
        for agent in self.agents:
            if not plans[agent]:
                raise InfeasibleScenarioError(f"Agent {agent} has no candidate plan")

    def _feasible(self, loads):
        return self.table is None or loads_feasible(loads, self.table)

    def _combined(self, normalizer, g, local_sum):
        local_hat = normalizer.local(local_sum / len(self.agents))
        global_value = self.objective(g)
        return weighted(local_hat, normalizer.global_(global_value), self.lam), global_value

    def _initialize(self):
        """Bottom-up, each agent takes its first plan keeping the partial selection feasible, reference first"""
        size = len(next(iter(self.plans.values()))[0].utilization) // 2
        partial = HostLoad.empty(size)
        chosen = {}
        for level in self.overlay.levels():
            for agent in level:
                plans = self.plans[agent]
                order = sorted(range(len(plans)), key=lambda i: (not plans[i].reference, i))
                for index in order:
                    plan = plans[index]
                    candidate = partial + plan.loads
                    if self._feasible(candidate):
                        chosen[agent] = index
                        partial = candidate
                        break
                else:
                    raise InfeasibleScenarioError(f"No plan of agent {agent} fits the partial selection")
        return chosen

    def fit_normalizer(self, chosen=None):
        """Min-max ranges of local and global cost probed around a selection (all first plans by default)"""
        if chosen is None:
            chosen = {agent: 0 for agent in self.agents}
        base = sum(self.plans[agent][chosen[agent]].utilization for agent in self.agents)
        global_samples = []
        for agent in self.agents:
            own = self.plans[agent][chosen[agent]].utilization
            for plan in self.plans[agent]:
                global_samples.append(self.objective(base - own + plan.utilization))
        count = len(self.agents)
        low = sum(min(plan.local_cost for plan in self.plans[agent]) for agent in self.agents) / count
        high = sum(max(plan.local_cost for plan in self.plans[agent]) for agent in self.agents) / count
        return Normalizer.fit([low, high], global_samples)

    def _propose(self, agent, stack, current, normalizer):
        g_others, local_others, loads_others = stack.others(agent)
        best_index = current
        best_cost = math.inf
        for index, plan in enumerate(self.plans[agent]):
            if not self._feasible(loads_others + plan.loads):
                continue
            cost, _ = self._combined(normalizer, g_others + plan.utilization, local_others + plan.local_cost)
            if cost < best_cost:
                best_index, best_cost = index, cost
        return best_index, len(self.plans[agent])

    def _record(self, iteration, stack, chosen, normalizer):
        g = stack.global_plan()
        local_sum = float(stack.local.sum())
        combined, global_value = self._combined(normalizer, g, local_sum)
        return IterationRecord(iteration=iteration, global_plan=g, combined_cost=combined,
                               selections=dict(chosen), local_cost=local_sum / len(self.agents),
                               global_cost=global_value)

    def run(self):
        chosen = self._initialize()
        normalizer = self.fit_normalizer(chosen)
        stack = _Stack(self.agents, self.plans, chosen)
        records = [self._record(0, stack, chosen, normalizer)]
        current_cost = records[0].combined_cost
        self.logger.debug(f"Initial combined cost {current_cost:.6g} over {len(self.agents)} agents")

        executor = ThreadPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        try:
            for iteration in range(1, self.max_iterations + 1):
                changes = 0
                for level in self.overlay.levels():
                    if executor is not None:
                        proposals = list(executor.map(
                            lambda agent: self._propose(agent, stack, chosen[agent], normalizer), level))
                    else:
                        proposals = [self._propose(agent, stack, chosen[agent], normalizer) for agent in level]

                    self.evaluations += sum(evaluated for _, evaluated in proposals)
                    for agent, (index, _) in zip(level, proposals):
                        if index == chosen[agent]:
                            continue
                        previous = self.plans[agent][chosen[agent]]
                        stack.set(agent, self.plans[agent][index])
                        cost, _ = self._combined(normalizer, stack.global_plan(), float(stack.local.sum()))
                        if cost <= current_cost and self._feasible(stack.total_loads()):
                            chosen[agent] = index
                            current_cost = cost
                            changes += 1
                        else:
                            stack.set(agent, previous)

                # Top-down: the root's aggregate becomes every agent's view of the next iteration.
                record = self._record(iteration, stack, chosen, normalizer)
                if record.combined_cost > records[-1].combined_cost:
                    self.logger.error(f"Combined cost rose from {records[-1].combined_cost} "
                                      f"to {record.combined_cost} at iteration {iteration}")
                    raise InvariantViolation(f"combined cost increased at iteration {iteration}")
                records.append(record)
                current_cost = record.combined_cost
                if changes == 0 and self.stop_when_stable:
                    break
        finally:
            if executor is not None:
                executor.shutdown()

        self.logger.debug(f"Converged after {len(records) - 1} iterations, "
                          f"combined cost {records[-1].combined_cost:.6g}")
        return OptimizationResult(selections=dict(chosen), records=records, normalizer=normalizer,
                                  evaluations=self.evaluations)


def optimize(plans, overlay, lam=None, objective=None, max_iterations=None, table=None, workers=1):
    """Select one plan per agent; returns an OptimizationResult with the iteration trace"""
    return CollectiveOptimizer(plans, overlay, lam=lam, objective=objective, max_iterations=max_iterations,
                               table=table, workers=workers).run()


@dataclass(frozen=True)
class ProbeSample:
    agents: int
    plans_per_agent: int
    iterations: int
    evaluations: int
    depth: int


def _synthetic_plans(agent_count, plans_per_agent, nodes, rng):
    plans = {}
    for a in range(agent_count):
        agent = f"agent-{a:04d}"
        plans[agent] = [
            PlacementPlan(owner=agent, assignment=(), cost=_SyntheticCost(float(rng.uniform(0.0, 1.0))),
                          loads=HostLoad.empty(nodes), utilization=rng.uniform(0.0, 0.1, size=2 * nodes))
            for _ in range(plans_per_agent)
        ]
    return plans


@dataclass(frozen=True)
class _SyntheticCost:
    total: float


def complexity_probe(agent_counts, plans_per_agent, iterations, branching=None, seed=0, nodes=8):
    """Plan evaluations and tree depth of fixed-length runs on synthetic agents

    Returns the samples and the R^2 of a linear fit of evaluations per
    iteration against the agent count.
    """
    from objectives import variance_objective

    logger = logging.getLogger(__name__)
    rng = np.random.default_rng(seed)
    samples = []
    for count in agent_counts:
        plans = _synthetic_plans(count, plans_per_agent, nodes, rng)
        overlay = build_tree(plans, branching, seed)
        optimizer = CollectiveOptimizer(plans, overlay, lam=0.5, objective=variance_objective,
                                        max_iterations=iterations, stop_when_stable=False)
        result = optimizer.run()
        samples.append(ProbeSample(agents=count, plans_per_agent=plans_per_agent,
                                   iterations=len(result.records) - 1,
                                   evaluations=result.evaluations, depth=overlay.height))
        logger.info(f"Probe |F|={count}: {result.evaluations} evaluations, depth {overlay.height}")

    r_squared = float('nan')
    if len(samples) >= 2:
        fit = stats.linregress([s.agents for s in samples],
                               [s.evaluations / max(1, s.iterations) for s in samples])
        r_squared = float(fit.rvalue ** 2)
    return samples, r_squared
