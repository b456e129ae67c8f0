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

"""Local provisioning cost of placement plans.

Every component is a sum over (service, host) pairs. Only the violation term
couples services, and only those sharing a host, so the cost of a plan is the
sum of independent per-host costs.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, fields

from config import SIMULATION_CONFIG
from model import JOULES_PER_KWH, UnreachableHostError
from mobility import connection_probabilities
import queueing

COMPONENTS = ('processing', 'ram', 'storage', 'deployment', 'communication', 'energy', 'carbon', 'violation')


@dataclass(frozen=True)
class CostBreakdown:
    processing: float = 0.0
    ram: float = 0.0
    storage: float = 0.0
    deployment: float = 0.0
    communication: float = 0.0
    energy: float = 0.0
    carbon: float = 0.0
    violation: float = 0.0
    server_power_cost: float = 0.0     # currency/s
    network_power_cost: float = 0.0    # currency/s
    nonrenewable_power: float = 0.0    # W

    @property
    def total(self):
        return (self.processing + self.ram + self.storage + self.deployment
                + self.communication + self.energy + self.carbon + self.violation)

    def __add__(self, other):
        return CostBreakdown(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def __sub__(self, other):
        return CostBreakdown(**{f.name: getattr(self, f.name) - getattr(other, f.name) for f in fields(self)})

    def as_dict(self):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values['total'] = self.total
        return values


def sum_breakdowns(breakdowns):
    result = CostBreakdown()
    for breakdown in breakdowns:
        result = result + breakdown
    return result


class RoundContext:
    """Everything cost evaluation needs for one decision round (read-only)"""

    def __init__(self, topology, pricebook, state, startup_delay=None, fallback_ap=None,
                 utilization_cap=None):
        self.logger = logging.getLogger('RoundContext')
        self.topology = topology
        self.pricebook = pricebook
        self.state = state
        self.slot_length = state.slot_length
        self.round_index = state.round_index
        self.previous_placement = state.previous_placement
        self.startup_delay = (SIMULATION_CONFIG['container_startup_delay']
                              if startup_delay is None else startup_delay)
        self.utilization_cap = (SIMULATION_CONFIG['utilization_cap']
                                if utilization_cap is None else utilization_cap)
        if fallback_ap is None:
            fallback_ap = SIMULATION_CONFIG['fallback_ap']
        if fallback_ap is None and topology.access_points:
            fallback_ap = topology.access_points[0].id
        self.fallback_ap = fallback_ap

        self.services = {service.id: service for service in state.services}
        self.service_ids = sorted(self.services)
        self.active_nodes = frozenset(node_id for node_id in state.active_nodes
                                      if topology.nodes_by_id[node_id].active)

        self.coverage = {}
        self.cloud_only = set()
        self.receivers = {}
        for service_id in self.service_ids:
            service = self.services[service_id]
            trace = state.trace_for(service)
            if trace is None:
                coverage = connection_probabilities_missing(service.vehicle, self.fallback_ap)
            else:
                coverage = connection_probabilities(trace, self.slot_length, self.fallback_ap)
            self.coverage[service.vehicle] = coverage
            if not coverage.covered:
                self.cloud_only.add(service_id)
            self.receivers[service_id] = self._receiver(coverage)
        if self.cloud_only:
            self.logger.debug(f"Round {self.round_index}: {len(self.cloud_only)} services without coverage")

    def _receiver(self, coverage):
        ap_id = coverage.dominant_ap()
        if ap_id is None:
            return None
        return self.topology.nearest_fog(ap_id, self.active_nodes)

    def node(self, node_id):
        return self.topology.nodes_by_id[node_id]

    def coverage_of(self, service):
        return self.coverage[service.vehicle]

    def startup_for(self, node):
        if self.round_index == 0 and not node.is_cloud:
            return self.startup_delay
        return 0.0

    @property
    def cloud_id(self):
        cloud = self.topology.cloud
        return cloud.id if cloud is not None else None


def connection_probabilities_missing(vehicle, fallback_ap):
    from mobility import Coverage
    probabilities = {fallback_ap: 1.0} if fallback_ap is not None else {}
    return Coverage(vehicle=vehicle, probabilities=probabilities, covered=False)


def _utilization_share(node, cpu_rate):
    """Share of the node's power-rated processing a load occupies"""
    rating = node.cpu_capacity if node.bounded else node.power_rating
    return cpu_rate / rating


def processing(ctx, service, node):
    return service.arrival_rate * service.cpu_demand * ctx.pricebook.cpu_price[node.id] * ctx.slot_length


def ram(ctx, service, node):
    return service.ram_demand * ctx.pricebook.ram_price[node.id] * ctx.slot_length


def storage(ctx, service, node):
    return service.storage_demand * ctx.pricebook.storage_price[node.id] * ctx.slot_length


def deployment(ctx, service, node):
    if node.is_cloud or ctx.previous_placement.get(service.id) == node.id:
        return 0.0
    return service.storage_demand * ctx.topology.deployment_unit_cost(node.id)


def communication(ctx, service, node):
    coverage = ctx.coverage_of(service)
    cost = 0.0
    for ap_id, probability in coverage.probabilities.items():
        if probability <= 0 or not coverage.covered:
            continue
        path = ctx.topology.path(ap_id, node.id)
        cost += service.payload * service.arrival_rate * path.unit_cost * probability * ctx.slot_length
    return cost


def power(ctx, service, node):
    """(server cost/s, network cost/s, non-renewable W) caused by one service on a host"""
    book = ctx.pricebook
    topology = ctx.topology

    server_watts = node.pue * node.dynamic_power * _utilization_share(node, service.cpu_rate)
    server_cost = server_watts * book.energy_price(node.renewable_ratio)
    nonrenewable = server_watts * (1.0 - node.renewable_ratio)

    network_cost = 0.0
    router = topology.router_of(node.id)
    if router is not None:
        router_watts = node.pue * service.arrival_rate * (
            service.request_size * router.transfer_power_up + service.response_size * router.transfer_power_down)
        network_cost += router_watts * book.energy_price(router.renewable_ratio)
        nonrenewable += router_watts * (1.0 - router.renewable_ratio)

    coverage = ctx.coverage_of(service)
    if coverage.covered:
        for ap_id, probability in coverage.probabilities.items():
            ap = topology.aps_by_id[ap_id]
            ap_watts = probability * service.arrival_rate * (
                service.request_size * ap.transfer_power_up + service.response_size * ap.transfer_power_down)
            network_cost += ap_watts * book.energy_price(ap.renewable_ratio)
            nonrenewable += ap_watts * (1.0 - ap.renewable_ratio)
    return server_cost, network_cost, nonrenewable


def violation(ctx, service, node, host_work):
    """Deadline violation cost of a service sharing a host whose total work is host_work MI"""
    coverage = ctx.coverage_of(service)
    share = queueing.share_of_host(service.cpu_demand, host_work) if node.bounded else 1.0
    assessment = queueing.assess(node, share, service.cpu_rate)
    if assessment.stable:
        fraction = queueing.violation_fraction(service, node.id, coverage, ctx.topology,
                                               assessment.waiting_time, ctx.startup_for(node))
    else:
        fraction = 1.0
    excess = max(0.0, fraction - (1.0 - service.qos_level))
    return excess * service.arrival_rate * service.violation_unit_cost * ctx.slot_length


def service_breakdown(ctx, service, node, host_work):
    server_cost, network_cost, nonrenewable = power(ctx, service, node)
    tau = ctx.slot_length
    book = ctx.pricebook
    return CostBreakdown(
        processing=processing(ctx, service, node),
        ram=ram(ctx, service, node),
        storage=storage(ctx, service, node),
        deployment=deployment(ctx, service, node),
        communication=communication(ctx, service, node),
        energy=tau * (server_cost + network_cost),
        carbon=book.carbon_price * book.emission_rate * nonrenewable * tau / JOULES_PER_KWH,
        violation=violation(ctx, service, node, host_work),
        server_power_cost=server_cost,
        network_power_cost=network_cost,
        nonrenewable_power=nonrenewable,
    )


def host_cost(ctx, node_id, service_ids):
    """Cost of the given services sharing one host, summed in service-id order"""
    node = ctx.node(node_id)
    ordered = sorted(service_ids)
    host_work = sum(ctx.services[service_id].cpu_demand for service_id in ordered)
    return sum_breakdowns(service_breakdown(ctx, ctx.services[service_id], node, host_work)
                          for service_id in ordered)


def group_by_host(assignment):
    hosts = defaultdict(list)
    for service_id, node_id in assignment.items():
        hosts[node_id].append(service_id)
    return hosts


def _pairs(ctx, assignment):
    for service_id in sorted(assignment):
        yield ctx.services[service_id], ctx.node(assignment[service_id])


def resource_cost(assignment, ctx):
    """(processing, RAM, storage) cost of a plan"""
    o_p = o_m = o_s = 0.0
    for service, node in _pairs(ctx, assignment):
        o_p += processing(ctx, service, node)
        o_m += ram(ctx, service, node)
        o_s += storage(ctx, service, node)
    return o_p, o_m, o_s


def deployment_cost(assignment, ctx):
    return sum(deployment(ctx, service, node) for service, node in _pairs(ctx, assignment))


def communication_cost(assignment, ctx):
    return sum(communication(ctx, service, node) for service, node in _pairs(ctx, assignment))


def power_and_energy(assignment, ctx):
    """(server cost/s, network cost/s, energy cost, non-renewable W, carbon cost)"""
    server = network = nonrenewable = 0.0
    for service, node in _pairs(ctx, assignment):
        s, n, e = power(ctx, service, node)
        server += s
        network += n
        nonrenewable += e
    book = ctx.pricebook
    tau = ctx.slot_length
    energy = tau * (network + server)
    carbon = book.carbon_price * book.emission_rate * nonrenewable * tau / JOULES_PER_KWH
    return server, network, energy, nonrenewable, carbon


def violation_cost(assignment, ctx):
    total = 0.0
    for node_id, service_ids in sorted(group_by_host(assignment).items()):
        node = ctx.node(node_id)
        host_work = sum(ctx.services[service_id].cpu_demand for service_id in service_ids)
        for service_id in sorted(service_ids):
            total += violation(ctx, ctx.services[service_id], node, host_work)
    return total


def total_local_cost(assignment, ctx):
    """Full cost breakdown of a plan; host costs are summed in node-id order"""
    try:
        return sum_breakdowns(host_cost(ctx, node_id, service_ids)
                              for node_id, service_ids in sorted(group_by_host(assignment).items()))
    except UnreachableHostError:
        logging.getLogger(__name__).error(f"Plan routes traffic to an unreachable host in round {ctx.round_index}")
        raise
