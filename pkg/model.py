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

"""Domain entities, parameter books and round state shared by every module."""

import math
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Optional, Sequence, Tuple

from config import PRICE_CONFIG
from mobility import MobilityTrace

KB = 1024.0
MB = 1024.0 ** 2
GB = 1024.0 ** 3
JOULES_PER_KWH = 3.6e6
SECONDS_PER_MONTH = 730.0 * 3600.0

# Cloud storage/processing capacity marker; checks short-circuit on it.
UNBOUNDED = None

FOG = 'fog'
CLOUD = 'cloud'
ROUTER_KINDS = ('edge-router', 'core-router', 'switch', 'base-station')
LINK_TIERS = ('intra-edge', 'core', 'cloud')


class SimulationError(Exception):
    """Base class of all simulator errors"""


class ScenarioError(SimulationError):
    """Scenario failed validation; carries every diagnostic"""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__(f"{len(self.errors)} scenario violation(s): " + '; '.join(self.errors))


class ScenarioParseError(SimulationError):
    """Input file could not be parsed"""

    def __init__(self, path, message, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        location = path
        if line is not None:
            location += f":{line}"
            if column is not None:
                location += f":{column}"
        super().__init__(f"{location}: {message}")


class SchemaVersionError(SimulationError):
    """Topology document written for another schema version"""


class UnstableQueueError(SimulationError):
    """Arrival rate reaches or exceeds the service rate"""


class UnreachableHostError(SimulationError):
    """No route from any covering access point to the host"""


class InfeasibleScenarioError(SimulationError):
    """Not even the cloud can host a service"""


class InvariantViolation(SimulationError):
    """A run-time invariant assertion failed"""


def is_unbounded(capacity):
    return capacity is UNBOUNDED


@dataclass(frozen=True)
class Node:
    """Fog server or cloud center"""
    id: str
    kind: str
    cpu_capacity: Optional[float]      # MIPS
    ram_capacity: Optional[float]      # bytes
    storage_capacity: Optional[float]  # bytes
    unit_count: int
    unit_rate: float                   # MIPS per processing unit
    idle_power: float                  # W
    max_power: float                   # W
    renewable_ratio: float
    pue: float = 1.0
    active: bool = True
    attached_router: Optional[str] = None

    @property
    def is_cloud(self):
        return self.kind == CLOUD

    @property
    def bounded(self):
        return not is_unbounded(self.cpu_capacity)

    @property
    def dynamic_power(self):
        return self.max_power - self.idle_power

    @property
    def power_rating(self):
        """Processing rate the power profile refers to (one machine for the cloud)"""
        return self.unit_count * self.unit_rate


@dataclass(frozen=True)
class AccessPoint:
    id: str
    position: Tuple[float, float]
    coverage_radius: float
    renewable_ratio: float
    transfer_power_up: float           # J per uploaded byte
    transfer_power_down: float         # J per downloaded byte
    uplink_rate: float                 # bits/s
    downlink_rate: float               # bits/s
    colocated_fog: Optional[str] = None
    attached_router: Optional[str] = None
    access_delay: float = 0.001        # vehicle to AP propagation, s


@dataclass(frozen=True)
class Link:
    source: str
    target: str
    delay: float                       # s
    uplink_rate: float                 # bits/s
    downlink_rate: float               # bits/s
    unit_cost: float                   # currency per byte
    tier: str = 'intra-edge'

    @property
    def endpoints(self):
        return (self.source, self.target)


@dataclass(frozen=True)
class RouterProfile:
    id: str
    kind: str
    transfer_power_up: float           # J per byte
    transfer_power_down: float         # J per byte
    renewable_ratio: float
    idle_power: float = 0.0
    max_power: float = 0.0


@dataclass(frozen=True)
class Service:
    """Per-vehicle service demand record"""
    id: str
    vehicle: str
    cpu_demand: float                  # MI per request
    ram_demand: float                  # bytes
    storage_demand: float              # bytes
    request_size: float                # bytes
    response_size: float               # bytes
    arrival_rate: float                # requests/s
    deadline: float                    # s
    qos_level: float
    violation_unit_cost: float         # currency per request

    @property
    def cpu_rate(self):
        """Instruction arrival rate in MI/s"""
        return self.cpu_demand * self.arrival_rate

    @property
    def payload(self):
        return self.request_size + self.response_size


@dataclass(frozen=True)
class PriceBook:
    cpu_price: Mapping[str, float]         # currency per MI, per node
    ram_price: Mapping[str, float]         # currency per byte-second, per node
    storage_price: Mapping[str, float]     # currency per byte-second, per node
    nonrenewable_energy_price: float       # currency per kWh
    renewable_energy_price: float          # currency per kWh
    carbon_price: float                    # currency per kg
    emission_rate: float                   # kg CO2 per kWh

    def energy_price(self, renewable_ratio):
        """Blended energy price in currency per joule"""
        per_kwh = ((1.0 - renewable_ratio) * self.nonrenewable_energy_price
                   + renewable_ratio * self.renewable_energy_price)
        return per_kwh / JOULES_PER_KWH


@dataclass(frozen=True)
class Scenario:
    """Validated scenario: immutable, safe to share across workers"""
    topology: object
    services: Tuple[Service, ...]
    traces: Tuple[MobilityTrace, ...]
    pricebook: PriceBook
    slot_length: float


@dataclass(frozen=True)
class RoundState:
    round_index: int
    slot_length: float
    previous_placement: Mapping[str, str]
    active_nodes: FrozenSet[str]
    services: Tuple[Service, ...]
    traces: Tuple[MobilityTrace, ...]
    profile: int = 0
    vehicle_traces: Dict[str, MobilityTrace] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.vehicle_traces is None:
            object.__setattr__(self, 'vehicle_traces', {trace.vehicle: trace for trace in self.traces})

    def trace_for(self, service):
        return self.vehicle_traces.get(service.vehicle)


def credit_percentage(qos_level, schedule=None):
    """SLA service credit for a QoS tier"""
    schedule = schedule or PRICE_CONFIG['sla_credit_schedule']
    for bound, credit in schedule:
        if qos_level < bound:
            return credit
    return schedule[-1][1]


def resolve_violation_unit_cost(qos_level, monthly_price, nominal_rate, schedule=None):
    """Per-request violation cost from the monthly price and the QoS tier"""
    if nominal_rate <= 0:
        return 0.0
    monthly_requests = nominal_rate * SECONDS_PER_MONTH
    return credit_percentage(qos_level, schedule) * monthly_price / monthly_requests


def _check_fraction(errors, where, name, value):
    if not 0.0 <= value <= 1.0:
        errors.append(f"{where}: {name} {value} outside [0, 1]")


def _check_positive(errors, where, name, value):
    if not value > 0:
        errors.append(f"{where}: nonpositive {name} {value}")


def _node_violations(node, routers, errors):
    where = f"node {node.id}"
    if node.kind not in (FOG, CLOUD):
        errors.append(f"{where}: unknown kind {node.kind!r}")
    if node.unit_count < 1:
        errors.append(f"{where}: nonpositive unit_count {node.unit_count}")
    _check_positive(errors, where, 'unit_rate', node.unit_rate)
    for name in ('cpu_capacity', 'ram_capacity', 'storage_capacity'):
        value = getattr(node, name)
        if is_unbounded(value):
            if node.kind == FOG:
                errors.append(f"{where}: fog {name} must be bounded")
        elif not value > 0:
            errors.append(f"{where}: nonpositive {name} {value}")
    if (node.kind == FOG and not is_unbounded(node.cpu_capacity) and node.cpu_capacity > 0
            and node.unit_count >= 1 and node.unit_rate > 0
            and not math.isclose(node.cpu_capacity, node.unit_count * node.unit_rate, rel_tol=1e-9)):
        errors.append(f"{where}: capacity inconsistency, cpu_capacity {node.cpu_capacity} "
                      f"!= {node.unit_count} x {node.unit_rate}")
    _check_fraction(errors, where, 'renewable_ratio', node.renewable_ratio)
    if node.idle_power < 0:
        errors.append(f"{where}: negative idle_power {node.idle_power}")
    elif node.max_power < node.idle_power:
        errors.append(f"{where}: max_power {node.max_power} below idle_power {node.idle_power}")
    if node.kind == FOG and node.pue != 1.0:
        errors.append(f"{where}: fog pue must be 1, got {node.pue}")
    elif node.kind == CLOUD and node.pue < 1.0:
        errors.append(f"{where}: pue {node.pue} below 1")
    if node.attached_router is not None and node.attached_router not in routers:
        errors.append(f"{where}: dangling reference to router {node.attached_router}")


def _ap_violations(ap, nodes, routers, errors):
    where = f"access point {ap.id}"
    _check_positive(errors, where, 'coverage_radius', ap.coverage_radius)
    _check_positive(errors, where, 'uplink_rate', ap.uplink_rate)
    _check_positive(errors, where, 'downlink_rate', ap.downlink_rate)
    _check_fraction(errors, where, 'renewable_ratio', ap.renewable_ratio)
    if ap.transfer_power_up < 0 or ap.transfer_power_down < 0:
        errors.append(f"{where}: negative transfer power")
    if ap.access_delay < 0:
        errors.append(f"{where}: negative access_delay {ap.access_delay}")
    if ap.colocated_fog is not None and ap.colocated_fog not in nodes:
        errors.append(f"{where}: dangling reference to node {ap.colocated_fog}")
    if ap.attached_router is not None and ap.attached_router not in routers:
        errors.append(f"{where}: dangling reference to router {ap.attached_router}")


def _link_violations(link, entities, errors):
    where = f"link {link.source}-{link.target}"
    for endpoint in link.endpoints:
        if endpoint not in entities:
            errors.append(f"{where}: dangling reference to {endpoint}")
    if link.delay < 0:
        errors.append(f"{where}: negative delay {link.delay}")
    _check_positive(errors, where, 'uplink_rate', link.uplink_rate)
    _check_positive(errors, where, 'downlink_rate', link.downlink_rate)
    if link.unit_cost < 0:
        errors.append(f"{where}: negative unit_cost {link.unit_cost}")
    if link.tier not in LINK_TIERS:
        errors.append(f"{where}: unknown tier {link.tier!r}")


def _router_violations(router, errors):
    where = f"router {router.id}"
    if router.kind not in ROUTER_KINDS:
        errors.append(f"{where}: unknown kind {router.kind!r}")
    if router.transfer_power_up < 0 or router.transfer_power_down < 0:
        errors.append(f"{where}: negative transfer power")
    _check_fraction(errors, where, 'renewable_ratio', router.renewable_ratio)


def _service_violations(service, vehicles, errors):
    where = f"service {service.id}"
    for name in ('cpu_demand', 'ram_demand', 'storage_demand', 'request_size', 'response_size', 'deadline'):
        _check_positive(errors, where, name, getattr(service, name))
    if not 0.0 < service.qos_level < 1.0:
        errors.append(f"{where}: qos_level {service.qos_level} outside (0, 1)")
    if service.arrival_rate < 0:
        errors.append(f"{where}: negative arrival_rate {service.arrival_rate}")
    if service.violation_unit_cost < 0:
        errors.append(f"{where}: negative violation_unit_cost {service.violation_unit_cost}")
    if vehicles is not None and service.vehicle not in vehicles:
        errors.append(f"{where}: dangling reference to vehicle {service.vehicle}")


def _trace_violations(trace, aps, errors):
    where = f"trace {trace.vehicle}@{trace.round_index}"
    _check_positive(errors, where, 'speed', trace.speed)
    for segment in trace.segments:
        if segment.ap not in aps:
            errors.append(f"{where}: dangling reference to access point {segment.ap}")
        if segment.coverage_length < 0:
            errors.append(f"{where}: negative coverage_length {segment.coverage_length}")
        if segment.registration_time < 0 or segment.wait_time < 0:
            errors.append(f"{where}: negative registration/wait time at {segment.ap}")


def _pricebook_violations(pricebook, nodes, errors):
    for book_name in ('cpu_price', 'ram_price', 'storage_price'):
        book = getattr(pricebook, book_name)
        for node_id in nodes:
            if node_id not in book:
                errors.append(f"pricebook: missing {book_name} for node {node_id}")
            elif book[node_id] < 0:
                errors.append(f"pricebook: negative {book_name} for node {node_id}")
    for name in ('nonrenewable_energy_price', 'renewable_energy_price', 'carbon_price', 'emission_rate'):
        if getattr(pricebook, name) < 0:
            errors.append(f"pricebook: negative {name}")


def scenario_violations(topology, services, traces, pricebook, slot_length, check_vehicles=True):
    """Every invariant violation of a parsed scenario, one diagnostic per malformed field"""
    errors = []
    nodes = topology.nodes_by_id
    aps = topology.aps_by_id
    routers = topology.routers_by_id

    seen = set()
    for entity_id in [n.id for n in topology.nodes] + [a.id for a in topology.access_points] + [r.id for r in topology.routers]:
        if entity_id in seen:
            errors.append(f"duplicate id {entity_id}")
        seen.add(entity_id)

    for node in topology.nodes:
        _node_violations(node, routers, errors)
    if not any(node.is_cloud for node in topology.nodes):
        errors.append("topology: no cloud node")
    for ap in topology.access_points:
        _ap_violations(ap, nodes, routers, errors)
    for router in topology.routers:
        _router_violations(router, errors)
    entities = set(nodes) | set(aps) | set(routers)
    for link in topology.links:
        _link_violations(link, entities, errors)

    vehicles = {trace.vehicle for trace in traces} if check_vehicles else None
    service_ids = set()
    for service in services:
        if service.id in service_ids:
            errors.append(f"duplicate service id {service.id}")
        service_ids.add(service.id)
        _service_violations(service, vehicles, errors)
    for trace in traces:
        _trace_violations(trace, aps, errors)

    _pricebook_violations(pricebook, nodes, errors)
    if not slot_length > 0:
        errors.append(f"slot length {slot_length} must be positive")
    return errors


def validate_scenario(topology, services, traces, pricebook, slot_length, check_vehicles=True):
    """Return the validated scenario or raise ScenarioError with every violation"""
    logger = logging.getLogger(__name__)
    errors = scenario_violations(topology, services, traces, pricebook, slot_length, check_vehicles)
    if errors:
        for error in errors:
            logger.error(f"Scenario violation: {error}")
        raise ScenarioError(errors)
    logger.info(f"Scenario validated: {len(topology.nodes)} nodes, {len(topology.access_points)} APs, "
                f"{len(services)} services, {len(traces)} trace records")
    return Scenario(topology=topology, services=tuple(services), traces=tuple(traces),
                    pricebook=pricebook, slot_length=slot_length)


def validate_round_state(state, topology):
    """Violations of a round state against the topology"""
    errors = []
    if not state.slot_length > 0:
        errors.append(f"round {state.round_index}: slot length {state.slot_length} must be positive")
    for service_id, node_id in state.previous_placement.items():
        if node_id not in topology.nodes_by_id:
            errors.append(f"round {state.round_index}: previous placement of {service_id} "
                          f"references unknown node {node_id}")
    for node_id in state.active_nodes:
        if node_id not in topology.nodes_by_id:
            errors.append(f"round {state.round_index}: unknown active node {node_id}")
    return errors


def services_by_id(services: Sequence[Service]) -> Dict[str, Service]:
    return {service.id: service for service in services}
