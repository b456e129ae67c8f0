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

"""Placement plans: loads, feasibility checks and per-agent candidate generation."""

import itertools
import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np

from config import SIMULATION_CONFIG
from costs import CostBreakdown, group_by_host, host_cost, sum_breakdowns
from model import InfeasibleScenarioError
import queueing


class CapacityTable:
    """Node capacities in node-id order, the layout of load and utilization arrays"""

    def __init__(self, topology, utilization_cap=1.0, active_ids=None):
        self.topology = topology
        self.node_ids = topology.node_ids
        self.index = {node_id: i for i, node_id in enumerate(self.node_ids)}
        nodes = topology.nodes
        self.bounded = np.array([node.bounded for node in nodes], dtype=bool)
        self.cpu = np.array([node.cpu_capacity if node.bounded else math.inf for node in nodes], dtype=float)
        self.ram = np.array([node.ram_capacity if node.ram_capacity is not None else math.inf for node in nodes],
                            dtype=float)
        self.storage = np.array([node.storage_capacity if node.storage_capacity is not None else math.inf
                                 for node in nodes], dtype=float)
        self.active = np.array([node.active and (active_ids is None or node.id in active_ids or node.is_cloud)
                                for node in nodes], dtype=bool)
        self.cap = np.array([utilization_cap if not node.is_cloud else math.inf for node in nodes], dtype=float)
        # utilization reference: unbounded nodes are measured against their power-rated machine
        self.reference_cpu = np.array([node.cpu_capacity if node.bounded else node.power_rating for node in nodes],
                                      dtype=float)

    def __len__(self):
        return len(self.node_ids)


@dataclass(frozen=True, eq=False)
class HostLoad:
    """Per-node load arrays of a plan or of a set of plans"""
    cpu_rate: np.ndarray    # sum of z * L^p, MI/s
    cpu_work: np.ndarray    # sum of L^p, MI
    ram: np.ndarray         # bytes
    storage: np.ndarray     # bytes
    max_rate: np.ndarray    # largest arrival rate among hosted services, req/s

    @classmethod
    def empty(cls, size):
        return cls(*(np.zeros(size) for _ in range(5)))

    def __add__(self, other):
        return HostLoad(self.cpu_rate + other.cpu_rate, self.cpu_work + other.cpu_work,
                        self.ram + other.ram, self.storage + other.storage,
                        np.maximum(self.max_rate, other.max_rate))

    def utilization(self, table):
        """Interleaved CPU and RAM shares

        Unbounded nodes report CPU against their reference machine and no RAM share.
        """
        with np.errstate(divide='ignore', invalid='ignore'):
            cpu = np.where(table.reference_cpu > 0, self.cpu_rate / table.reference_cpu, 0.0)
            ram = np.where(np.isfinite(table.ram), self.ram / table.ram, 0.0)
        return np.column_stack([cpu, ram]).ravel()


def host_loads(assignment, table, services):
    loads = new_loads(table)
    for service_id, node_id in assignment.items():
        add_load(loads, table.index[node_id], services[service_id])
    return HostLoad(*loads)


def new_loads(table):
    """Mutable (cpu_rate, cpu_work, ram, storage, max_rate) arrays for incremental placement"""
    return [np.zeros(len(table)) for _ in range(5)]


def fits(table, loads, j, service):
    """Whether node j still admits the service on top of the incremental loads"""
    if not table.active[j]:
        return False
    if not table.bounded[j]:
        return True
    cpu_rate, cpu_work, ram, storage, max_rate = loads
    if ram[j] + service.ram_demand >= table.ram[j]:
        return False
    if storage[j] + service.storage_demand >= table.storage[j]:
        return False
    if max(max_rate[j], service.arrival_rate) * (cpu_work[j] + service.cpu_demand) >= table.cpu[j]:
        return False
    return cpu_rate[j] + service.cpu_rate <= table.cap[j] * table.cpu[j]


def add_load(loads, j, service):
    cpu_rate, cpu_work, ram, storage, max_rate = loads
    cpu_rate[j] += service.cpu_rate
    cpu_work[j] += service.cpu_demand
    ram[j] += service.ram_demand
    storage[j] += service.storage_demand
    max_rate[j] = max(max_rate[j], service.arrival_rate)


def loads_feasible(loads, table):
    """Vectorized capacity, stability and utilization-cap check of combined loads"""
    used = (loads.cpu_work > 0) | (loads.ram > 0) | (loads.storage > 0)
    if np.any(used & ~table.active):
        return False
    b = table.bounded
    if np.any(loads.ram[b] >= table.ram[b]) or np.any(loads.storage[b] >= table.storage[b]):
        return False
    if np.any(loads.max_rate[b] * loads.cpu_work[b] >= table.cpu[b]):
        return False
    return not np.any(loads.cpu_rate[b] > table.cap[b] * table.cpu[b])


def load_violations(loads, table):
    violations = []
    for j, node_id in enumerate(table.node_ids):
        if not (loads.cpu_work[j] > 0 or loads.ram[j] > 0 or loads.storage[j] > 0):
            continue
        if not table.active[j]:
            violations.append(f"{node_id}: node is deactivated")
        if not table.bounded[j]:
            continue
        if loads.ram[j] >= table.ram[j]:
            violations.append(f"{node_id}: RAM capacity exceeded ({loads.ram[j]:.0f} >= {table.ram[j]:.0f} B)")
        if loads.storage[j] >= table.storage[j]:
            violations.append(f"{node_id}: storage capacity exceeded "
                              f"({loads.storage[j]:.0f} >= {table.storage[j]:.0f} B)")
        if loads.max_rate[j] * loads.cpu_work[j] >= table.cpu[j]:
            violations.append(f"{node_id}: queue unstable (arrival rate {loads.max_rate[j]:.6g} req/s "
                              f"saturates its share of {table.cpu[j]:.6g} MIPS)")
        if loads.cpu_rate[j] > table.cap[j] * table.cpu[j]:
            violations.append(f"{node_id}: CPU utilization {loads.cpu_rate[j] / table.cpu[j]:.3f} "
                              f"above cap {table.cap[j]:.2f}")
    return violations


def feasibility_check(assignment, topology, services, utilization_cap=1.0, background=None, table=None):
    """All violations of a plan (empty list when feasible)

    ``assignment`` is a service->host mapping or a sequence of (service, host)
    pairs; a service listed twice violates single placement.
    """
    if table is None:
        table = CapacityTable(topology, utilization_cap)
    services = services if isinstance(services, dict) else {service.id: service for service in services}
    pairs = list(assignment.items()) if isinstance(assignment, dict) else list(assignment)

    violations = []
    seen = {}
    for service_id, node_id in pairs:
        if service_id in seen:
            violations.append(f"{service_id}: placed on both {seen[service_id]} and {node_id}")
            continue
        if service_id not in services:
            violations.append(f"{service_id}: unknown service")
            continue
        if node_id not in table.index:
            violations.append(f"{service_id}: unknown host {node_id}")
            continue
        seen[service_id] = node_id

    loads = host_loads(seen, table, services)
    if background is not None:
        loads = loads + background
    violations.extend(load_violations(loads, table))
    return violations


@dataclass(frozen=True, eq=False)
class PlacementPlan:
    owner: str
    assignment: Tuple[Tuple[str, str], ...]     # sorted (service, host) pairs
    cost: CostBreakdown
    loads: HostLoad
    utilization: np.ndarray
    reference: bool = False

    @property
    def local_cost(self):
        return self.cost.total

    @property
    def mapping(self) -> Dict[str, str]:
        return dict(self.assignment)

    @property
    def hosts(self):
        return sorted({node_id for _, node_id in self.assignment})


def build_plan(owner, assignment, ctx, table, costs=None):
    """Evaluated plan of an owner for a service->host mapping"""
    if costs is None:
        costs = HostCostCache(ctx)
    loads = host_loads(assignment, table, ctx.services)
    return PlacementPlan(owner=owner, assignment=tuple(sorted(assignment.items())),
                         cost=costs.plan(assignment), loads=loads,
                         utilization=loads.utilization(table))


class HostCostCache:
    """Memoized per-host costs of one agent's service groups"""

    def __init__(self, ctx):
        self.ctx = ctx
        self.cache = {}

    def host(self, node_id, service_ids):
        key = (node_id, tuple(sorted(service_ids)))
        cost = self.cache.get(key)
        if cost is None:
            cost = host_cost(self.ctx, node_id, key[1]) if key[1] else CostBreakdown()
            self.cache[key] = cost
        return cost

    def plan(self, assignment):
        return sum_breakdowns(self.host(node_id, service_ids)
                              for node_id, service_ids in sorted(group_by_host(assignment).items()))

    def marginal(self, node_id, hosted, service_id):
        return (self.host(node_id, hosted + [service_id]).total - self.host(node_id, hosted).total)


class PlanGenerator:
    """Candidate placement plans of one agent for its received services"""

    def __init__(self, ctx, table, seed=0, hop_radius=None, diversification_depth=None,
                 exhaustive_limit=None):
        self.logger = logging.getLogger('PlanGenerator')
        self.ctx = ctx
        self.table = table
        self.seed = seed
        self.hop_radius = SIMULATION_CONFIG['hop_radius'] if hop_radius is None else hop_radius
        self.depth = (SIMULATION_CONFIG['diversification_depth']
                      if diversification_depth is None else diversification_depth)
        if self.depth < 1:
            raise ValueError(f"diversification depth must be at least 1, got {self.depth}")
        self.exhaustive_limit = (SIMULATION_CONFIG['exhaustive_limit']
                                 if exhaustive_limit is None else exhaustive_limit)
        self._candidates = {}

    def candidate_hosts(self, agent, service_id):
        """Own node, fog nodes within the hop radius and the cloud, deadline-infeasible fog pruned"""
        key = (agent, service_id)
        cached = self._candidates.get(key)
        if cached is not None:
            return list(cached)
        ctx = self.ctx
        topology = ctx.topology
        cloud_id = ctx.cloud_id
        service = ctx.services[service_id]
        candidates = []
        if service_id not in ctx.cloud_only and agent in topology.nodes_by_id \
                and not topology.nodes_by_id[agent].is_cloud:
            for node in topology.fog_nodes:
                if node.id not in ctx.active_nodes or not self.table.active[self.table.index[node.id]]:
                    continue
                if node.id != agent and self.hop_radius is not None:
                    hops = topology.hop_distance(agent, node.id)
                    if hops is None or hops > self.hop_radius:
                        continue
                if not queueing.deadline_reachable(service, node, ctx.coverage_of(service), topology):
                    self.logger.debug(f"Pruned {node.id} for {service_id}: deadline unreachable")
                    continue
                candidates.append(node.id)
        if cloud_id is not None:
            candidates.append(cloud_id)
        if not candidates:
            raise InfeasibleScenarioError(f"No candidate host for {service_id} of agent {agent}")
        self._candidates[key] = tuple(candidates)
        return candidates

    def _exhaustive(self, service_ids, candidates, costs):
        best = None
        best_cost = math.inf
        for hosts in itertools.product(*(candidates[s] for s in service_ids)):
            assignment = dict(zip(service_ids, hosts))
            if not loads_feasible(host_loads(assignment, self.table, self.ctx.services), self.table):
                continue
            total = costs.plan(assignment).total
            if total < best_cost:
                best, best_cost = assignment, total
        return best

    def _greedy(self, service_ids, candidates, costs, rng=None, top=1, background=None):
        """Cheapest-marginal-cost placement, optionally on top of other agents' loads"""
        if background is None:
            loads = new_loads(self.table)
        else:
            loads = [array.copy() for array in (background.cpu_rate, background.cpu_work, background.ram,
                                                background.storage, background.max_rate)]
        hosted = {}
        assignment = {}
        for service_id in service_ids:
            service = self.ctx.services[service_id]
            options = []
            for node_id in candidates[service_id]:
                j = self.table.index[node_id]
                if not fits(self.table, loads, j, service):
                    continue
                delta = costs.marginal(node_id, hosted.get(node_id, []), service_id)
                options.append((delta, node_id))
            if not options:
                return None
            options.sort()
            if rng is None or top == 1 or len(options) == 1:
                choice = options[0][1]
            else:
                ranked = options[:top]
                weights = np.array([1.0 / max(delta, 1e-12) for delta, _ in ranked])
                choice = ranked[int(rng.choice(len(ranked), p=weights / weights.sum()))][1]
            add_load(loads, self.table.index[choice], service)
            hosted.setdefault(choice, []).append(service_id)
            assignment[service_id] = choice
        return assignment

    def _plan(self, agent, assignment, costs):
        return build_plan(agent, assignment, self.ctx, self.table, costs)

    def generate(self, agent, service_ids, count=None, reference=None, background=None):
        """Up to ``count`` distinct feasible plans, ascending by local cost

        ``reference`` is the agent's slice of a jointly feasible placement and is
        always kept, as is the all-cloud plan. With ``background`` (the loads the
        other agents' reference slices put on each node) the diversified plans
        are built to fit next to them.
        """
        if count is None:
            count = SIMULATION_CONFIG['plans_per_agent']
        if count < 1:
            raise ValueError(f"plan count must be at least 1, got {count}")
        service_ids = sorted(service_ids)
        costs = HostCostCache(self.ctx)
        if not service_ids:
            return [replace(self._plan(agent, {}, costs), reference=reference is not None)]

        candidates = {service_id: self.candidate_hosts(agent, service_id) for service_id in service_ids}
        space = 1
        for service_id in service_ids:
            space *= len(candidates[service_id])

        assignments = []
        if space <= self.exhaustive_limit:
            first = self._exhaustive(service_ids, candidates, costs)
        else:
            first = self._greedy(service_ids, candidates, costs)
        if first is not None:
            assignments.append(first)

        agent_key = zlib.crc32(str(agent).encode('utf-8'))
        attempts = 0
        k = 1
        while len(assignments) < 4 * count and attempts < 4 * count:
            rng = np.random.default_rng([self.seed, agent_key, k])
            candidate = self._greedy(service_ids, candidates, costs, rng=rng, top=k % self.depth + 1,
                                     background=background)
            if candidate is not None:
                assignments.append(candidate)
            attempts += 1
            k += 1

        required = []
        cloud_id = self.ctx.cloud_id
        if cloud_id is not None:
            cloud_plan = {service_id: cloud_id for service_id in service_ids}
            assignments.append(cloud_plan)
            required.append(tuple(sorted(cloud_plan.items())))
        reference_key = None
        if reference is not None:
            reference = {service_id: reference[service_id] for service_id in service_ids}
            assignments.append(reference)
            reference_key = tuple(sorted(reference.items()))
            required.append(reference_key)

        unique = {}
        for assignment in assignments:
            key = tuple(sorted(assignment.items()))
            if key not in unique:
                unique[key] = self._plan(agent, assignment, costs)
        if not unique:
            raise InfeasibleScenarioError(f"Agent {agent} has no feasible plan for {len(service_ids)} services")
        if reference_key is not None:
            unique[reference_key] = replace(unique[reference_key], reference=True)

        ranked = sorted(unique.values(), key=lambda plan: plan.local_cost)
        required = required[:count]
        others = [plan.assignment for plan in ranked if plan.assignment not in required]
        chosen = set(required) | set(others[:count - len(required)])
        ranked = [plan for plan in ranked if plan.assignment in chosen]
        self.logger.debug(f"Agent {agent}: {len(ranked)} plans for {len(service_ids)} services "
                          f"(space {space}, best {ranked[0].local_cost:.6g})")
        return ranked


def reference_placement(ctx, table, objective, candidates):
    """Jointly feasible placement of every service that levels the objective's node pressure

    Services go in descending order of instruction rate to the fitting candidate
    with the lowest pressure after placement. A host that meets the deadline
    from every covering AP while idle wins instead when its pressure stays
    within half of the service's own share above the best option.
    """
    loads = new_loads(table)
    placement = {}
    for service_id in sorted(candidates, key=lambda sid: (-ctx.services[sid].cpu_rate, sid)):
        service = ctx.services[service_id]
        coverage = ctx.coverage_of(service)
        options = []
        for node_id in candidates[service_id]:
            j = table.index[node_id]
            if not fits(table, loads, j, service):
                continue
            share = (loads[0][j] + service.cpu_rate) / table.reference_cpu[j]
            options.append((objective.pressure(j, share), node_id, j))
        if not options:
            raise InfeasibleScenarioError(f"No candidate host admits {service_id}")
        best = min(options)
        tolerance = 0.5 * service.cpu_rate / table.reference_cpu[best[2]]
        safe = [option for option in options if option[0] <= best[0] + tolerance
                and queueing.idle_violation_fraction(service, ctx.node(option[1]), coverage, ctx.topology)
                <= 1.0 - service.qos_level]
        pressure, node_id, j = min(safe) if safe else best
        add_load(loads, j, service)
        placement[service_id] = node_id
    return placement


def services_by_agent(ctx):
    """Received services per agent; every active fog node is an agent

    Services whose vehicle reaches no active fog node are owned by the cloud.
    """
    agents = {node.id: [] for node in ctx.topology.fog_nodes if node.id in ctx.active_nodes}
    for service_id in ctx.service_ids:
        owner = ctx.receivers.get(service_id) or ctx.cloud_id
        agents.setdefault(owner, []).append(service_id)
    return dict(sorted(agents.items()))


def generate_plans(agent, service_ids, ctx, count=None, seed=0, table=None, **options):
    """Candidate plans of one agent"""
    if table is None:
        table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
    return PlanGenerator(ctx, table, seed=seed, **options).generate(agent, service_ids, count)


def generate_all_plans(ctx, count=None, seed=0, workers=1, table=None, objective=None, **options):
    """Plans of every agent, generated in parallel and returned in agent-id order

    With an ``objective`` every agent also receives its slice of the shared
    reference placement, and its other plans are built around the rest of it.
    """
    if table is None:
        table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
    generator = PlanGenerator(ctx, table, seed=seed, **options)
    agents = services_by_agent(ctx)
    jobs = {agent: (service_ids, None, None) for agent, service_ids in agents.items()}
    if objective is not None and ctx.service_ids:
        candidates = {service_id: generator.candidate_hosts(agent, service_id)
                      for agent, service_ids in agents.items() for service_id in service_ids}
        placement = reference_placement(ctx, table, objective, candidates)
        for agent, service_ids in agents.items():
            own = set(service_ids)
            background = host_loads({service_id: node_id for service_id, node_id in placement.items()
                                     if service_id not in own}, table, ctx.services)
            jobs[agent] = (service_ids, {service_id: placement[service_id] for service_id in service_ids},
                           background)

    def run(agent):
        service_ids, reference, background = jobs[agent]
        return generator.generate(agent, service_ids, count, reference=reference, background=background)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, agents))
    else:
        results = [run(agent) for agent in agents]
    return dict(zip(agents, results))
