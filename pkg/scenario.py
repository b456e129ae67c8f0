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

"""Scenario files and per-round states.

Files of a scenario directory:
    topology.json        nodes, access points, routers, links and prices
    services.csv         service,vehicle,cpu_mi,ram_bytes,storage_bytes,request_bytes,
                         response_bytes,deadline_s,qos,monthly_price_usd
    iot_profiles.csv     profile,service,arrival_rate_rps
    mobility_<regime>.csv  round,vehicle,ap,coverage_m,reg_time_s,wait_s,speed_mps
"""

import os
import re
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import pandas as pd

from config import APP_CONFIG, PRICE_CONFIG, SIMULATION_CONFIG, STORAGE_CONFIG
from model import (AccessPoint, Link, Node, PriceBook, RouterProfile, RoundState, ScenarioError,
                   ScenarioParseError, SchemaVersionError, Service, resolve_violation_unit_cost,
                   validate_scenario)
from mobility import MobilityTrace, Segment
from network import Topology

UNBOUNDED_TOKEN = 'unbounded'

SERVICE_COLUMNS = ['service', 'vehicle', 'cpu_mi', 'ram_bytes', 'storage_bytes', 'request_bytes',
                   'response_bytes', 'deadline_s', 'qos', 'monthly_price_usd']
PROFILE_COLUMNS = ['profile', 'service', 'arrival_rate_rps']
MOBILITY_COLUMNS = ['round', 'vehicle', 'ap', 'coverage_m', 'reg_time_s', 'wait_s', 'speed_mps']
TEXT_COLUMNS = {'service', 'vehicle', 'ap'}


@dataclass
class ScenarioConfig:
    """Per-run choices: scenario files, seed and optimizer settings"""
    scenario_dir: str
    regime: str = 'default'
    seed: int = 1
    slot_length: float = SIMULATION_CONFIG['slot_length']
    lambdas: List[float] = field(default_factory=lambda: [SIMULATION_CONFIG['default_lambda']])
    objective: str = SIMULATION_CONFIG['objective']
    strategies: List[str] = field(default_factory=lambda: list(SIMULATION_CONFIG['strategies']))
    rounds: Optional[int] = None
    profile_offset: int = 0
    plans_per_agent: int = SIMULATION_CONFIG['plans_per_agent']
    branching: int = SIMULATION_CONFIG['branching']
    max_iterations: int = SIMULATION_CONFIG['max_iterations']
    hop_radius: Optional[int] = SIMULATION_CONFIG['hop_radius']
    utilization_cap: float = SIMULATION_CONFIG['utilization_cap']
    container_startup_delay: float = SIMULATION_CONFIG['container_startup_delay']
    fallback_ap: Optional[str] = SIMULATION_CONFIG['fallback_ap']
    planner_ratios: List[float] = field(default_factory=lambda: list(SIMULATION_CONFIG['exp3_ratios']))
    planner_active_counts: List[int] = field(default_factory=lambda: list(SIMULATION_CONFIG['exp3_active_counts']))
    planner_repetitions: int = SIMULATION_CONFIG['exp3_repetitions']
    eur_to_usd: float = PRICE_CONFIG['eur_to_usd']
    workers: int = 1

    @property
    def topology_path(self):
        return os.path.join(self.scenario_dir, STORAGE_CONFIG['topology_file'])

    @property
    def services_path(self):
        return os.path.join(self.scenario_dir, STORAGE_CONFIG['services_file'])

    @property
    def profiles_path(self):
        return os.path.join(self.scenario_dir, STORAGE_CONFIG['profiles_file'])

    @property
    def mobility_path(self):
        return os.path.join(self.scenario_dir, STORAGE_CONFIG['mobility_file'].format(regime=self.regime))

    def for_regime(self, regime):
        return replace(self, regime=regime)

    def validate(self):
        errors = []
        for path in (self.topology_path, self.services_path, self.profiles_path, self.mobility_path):
            if not os.path.exists(path):
                errors.append(f"missing file {path}")
        for lam in self.lambdas:
            if not 0.0 <= lam <= 1.0:
                errors.append(f"lambda {lam} outside [0, 1]")
        if self.slot_length <= 0:
            errors.append(f"slot length {self.slot_length} must be positive")
        if errors:
            raise ScenarioError(errors)
        return self

    def as_dict(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


# Topology document

def _capacity(value):
    return UNBOUNDED_TOKEN if value is None else value


def topology_to_document(topology, pricebook, slot_length):
    return {
        'schema_version': APP_CONFIG['schema_version'],
        'slot_length': slot_length,
        'nodes': [{
            'id': n.id, 'kind': n.kind, 'cpu_capacity': _capacity(n.cpu_capacity),
            'ram_capacity': _capacity(n.ram_capacity), 'storage_capacity': _capacity(n.storage_capacity),
            'unit_count': n.unit_count, 'unit_rate': n.unit_rate, 'idle_power': n.idle_power,
            'max_power': n.max_power, 'renewable_ratio': n.renewable_ratio, 'pue': n.pue,
            'active': n.active, 'attached_router': n.attached_router,
        } for n in topology.nodes],
        'access_points': [{
            'id': a.id, 'x': a.position[0], 'y': a.position[1], 'coverage_radius': a.coverage_radius,
            'renewable_ratio': a.renewable_ratio, 'transfer_power_up': a.transfer_power_up,
            'transfer_power_down': a.transfer_power_down, 'uplink_rate': a.uplink_rate,
            'downlink_rate': a.downlink_rate, 'colocated_fog': a.colocated_fog,
            'attached_router': a.attached_router, 'access_delay': a.access_delay,
        } for a in topology.access_points],
        'routers': [{
            'id': r.id, 'kind': r.kind, 'transfer_power_up': r.transfer_power_up,
            'transfer_power_down': r.transfer_power_down, 'renewable_ratio': r.renewable_ratio,
            'idle_power': r.idle_power, 'max_power': r.max_power,
        } for r in topology.routers],
        'links': [{
            'source': l.source, 'target': l.target, 'delay': l.delay, 'uplink_rate': l.uplink_rate,
            'downlink_rate': l.downlink_rate, 'unit_cost': l.unit_cost, 'tier': l.tier,
        } for l in topology.links],
        'prices': {
            'cpu': dict(pricebook.cpu_price),
            'ram': dict(pricebook.ram_price),
            'storage': dict(pricebook.storage_price),
            'nonrenewable_energy_kwh': pricebook.nonrenewable_energy_price,
            'renewable_energy_kwh': pricebook.renewable_energy_price,
            'carbon_kg': pricebook.carbon_price,
            'emission_kg_kwh': pricebook.emission_rate,
        },
    }


def write_topology(path, topology, pricebook, slot_length):
    with open(path, 'w') as topology_file:
        json.dump(topology_to_document(topology, pricebook, slot_length), topology_file, indent=4)
    logging.getLogger(__name__).info(f"Topology written: {path}")


def _entity(path, kind, record, builder):
    try:
        return builder(record)
    except (KeyError, TypeError, ValueError) as e:
        ident = record.get('id', '?') if isinstance(record, dict) else '?'
        raise ScenarioParseError(path, f"{kind} {ident}: malformed or missing field {e}")


def _bound(value):
    return None if value == UNBOUNDED_TOKEN or value is None else float(value)


def topology_from_document(document, path='<document>'):
    """(Topology, PriceBook, slot length) of a parsed topology document"""
    version = document.get('schema_version')
    if version != APP_CONFIG['schema_version']:
        raise SchemaVersionError(f"{path}: schema version {version}, expected {APP_CONFIG['schema_version']}")

    nodes = [_entity(path, 'node', r, lambda r: Node(
        id=str(r['id']), kind=r['kind'], cpu_capacity=_bound(r['cpu_capacity']),
        ram_capacity=_bound(r['ram_capacity']), storage_capacity=_bound(r['storage_capacity']),
        unit_count=int(r['unit_count']), unit_rate=float(r['unit_rate']),
        idle_power=float(r['idle_power']), max_power=float(r['max_power']),
        renewable_ratio=float(r['renewable_ratio']), pue=float(r.get('pue', 1.0)),
        active=bool(r.get('active', True)), attached_router=r.get('attached_router')))
        for r in document.get('nodes', [])]
    aps = [_entity(path, 'access point', r, lambda r: AccessPoint(
        id=str(r['id']), position=(float(r['x']), float(r['y'])), coverage_radius=float(r['coverage_radius']),
        renewable_ratio=float(r['renewable_ratio']), transfer_power_up=float(r['transfer_power_up']),
        transfer_power_down=float(r['transfer_power_down']), uplink_rate=float(r['uplink_rate']),
        downlink_rate=float(r['downlink_rate']), colocated_fog=r.get('colocated_fog'),
        attached_router=r.get('attached_router'), access_delay=float(r.get('access_delay', 0.001))))
        for r in document.get('access_points', [])]
    routers = [_entity(path, 'router', r, lambda r: RouterProfile(
        id=str(r['id']), kind=r['kind'], transfer_power_up=float(r['transfer_power_up']),
        transfer_power_down=float(r['transfer_power_down']), renewable_ratio=float(r['renewable_ratio']),
        idle_power=float(r.get('idle_power', 0.0)), max_power=float(r.get('max_power', 0.0))))
        for r in document.get('routers', [])]
    links = [_entity(path, 'link', r, lambda r: Link(
        source=str(r['source']), target=str(r['target']), delay=float(r['delay']),
        uplink_rate=float(r['uplink_rate']), downlink_rate=float(r['downlink_rate']),
        unit_cost=float(r['unit_cost']), tier=r.get('tier', 'intra-edge')))
        for r in document.get('links', [])]

    prices = document.get('prices', {})
    pricebook = _entity(path, 'prices', prices, lambda p: PriceBook(
        cpu_price={k: float(v) for k, v in p['cpu'].items()},
        ram_price={k: float(v) for k, v in p['ram'].items()},
        storage_price={k: float(v) for k, v in p['storage'].items()},
        nonrenewable_energy_price=float(p['nonrenewable_energy_kwh']),
        renewable_energy_price=float(p['renewable_energy_kwh']),
        carbon_price=float(p['carbon_kg']), emission_rate=float(p['emission_kg_kwh'])))
    slot_length = float(document.get('slot_length', SIMULATION_CONFIG['slot_length']))
    return Topology(nodes, aps, links, routers), pricebook, slot_length


def read_topology(path):
    try:
        with open(path) as topology_file:
            document = json.load(topology_file)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(path, e.msg, line=e.lineno, column=e.colno)
    except OSError as e:
        raise ScenarioParseError(path, str(e))
    return topology_from_document(document, path)


# CSV tables

_PANDAS_LINE = re.compile(r'line (\d+)')


def read_table(path, columns):
    """CSV as a DataFrame with typed columns; errors name the offending line and column"""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        return pd.DataFrame({column: pd.Series(dtype=object if column in TEXT_COLUMNS else float)
                             for column in columns})
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise ScenarioParseError(path, f"malformed row: {e}", line=int(match.group(1)) if match else None)
    except OSError as e:
        raise ScenarioParseError(path, str(e))

    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise ScenarioParseError(path, f"missing columns {missing}", line=1)

    for column in columns:
        if column in TEXT_COLUMNS:
            empty = frame[column].str.strip() == ''
            if empty.any():
                row = int(empty.idxmax())
                raise ScenarioParseError(path, "empty value", line=row + 2, column=column)
            continue
        values = pd.to_numeric(frame[column], errors='coerce')
        bad = values.isna()
        if bad.any():
            row = int(bad.idxmax())
            raise ScenarioParseError(path, f"invalid number {frame[column].iloc[row]!r}",
                                     line=row + 2, column=column)
        frame[column] = values
    return frame[columns]


def write_table(path, frame):
    frame.to_csv(path, index=False, float_format=APP_CONFIG['float_format'])


def traces_from_table(frame):
    """Mobility traces keyed by (round, vehicle), segments in file order"""
    traces = {}
    for (round_index, vehicle), rows in frame.groupby(['round', 'vehicle'], sort=True):
        segments = tuple(Segment(ap=row.ap, coverage_length=float(row.coverage_m),
                                 registration_time=float(row.reg_time_s), wait_time=float(row.wait_s))
                         for row in rows.itertuples(index=False))
        traces[(int(round_index), vehicle)] = MobilityTrace(vehicle=vehicle, speed=float(rows['speed_mps'].iloc[0]),
                                                            segments=segments, round_index=int(round_index))
    return traces


@dataclass
class LoadedScenario:
    """Validated scenario files and the round states derived from them"""
    config: ScenarioConfig
    topology: Topology
    pricebook: PriceBook
    services: Tuple[Service, ...]
    rates: Dict[Tuple[int, str], float]
    profiles: List[int]
    traces: Dict[Tuple[int, str], MobilityTrace]
    rounds: List[RoundState]

    def __iter__(self):
        return iter(self.rounds)

    def __len__(self):
        return len(self.rounds)


def _services_from_table(frame, rates):
    nominal = {}
    for (_, service_id), rate in rates.items():
        nominal.setdefault(service_id, []).append(rate)
    services = []
    for row in frame.itertuples(index=False):
        rates_of = nominal.get(row.service, [])
        nominal_rate = sum(rates_of) / len(rates_of) if rates_of else 0.0
        services.append(Service(
            id=row.service, vehicle=row.vehicle, cpu_demand=float(row.cpu_mi), ram_demand=float(row.ram_bytes),
            storage_demand=float(row.storage_bytes), request_size=float(row.request_bytes),
            response_size=float(row.response_bytes), arrival_rate=nominal_rate,
            deadline=float(row.deadline_s), qos_level=float(row.qos),
            violation_unit_cost=resolve_violation_unit_cost(float(row.qos), float(row.monthly_price_usd),
                                                            nominal_rate)))
    return services


def build_rounds(config, topology, services, rates, profiles, traces):
    """Round states: each IoT profile held for rounds_per_profile rounds, vehicles refreshed every round"""
    per_profile = SIMULATION_CONFIG['rounds_per_profile']
    count = SIMULATION_CONFIG['window_profiles'] * per_profile if config.rounds is None else config.rounds
    if count < 1:
        raise ScenarioError([f"rounds must be positive, got {count}"])
    needed = config.profile_offset + (count + per_profile - 1) // per_profile
    if needed > len(profiles):
        raise ScenarioError([f"{count} rounds from profile offset {config.profile_offset} need "
                             f"{needed} profiles, only {len(profiles)} available"])

    mobility_rounds = sorted({round_index for round_index, _ in traces})
    active = frozenset(node.id for node in topology.nodes if node.active)
    rounds = []
    for r in range(count):
        profile = profiles[config.profile_offset + r // per_profile]
        round_traces = ()
        if mobility_rounds:
            mobility_round = mobility_rounds[(config.profile_offset * per_profile + r) % len(mobility_rounds)]
            round_traces = tuple(trace for (index, _), trace in sorted(traces.items()) if index == mobility_round)
        present = {trace.vehicle for trace in round_traces}
        round_services = tuple(
            replace(service, arrival_rate=rates[(profile, service.id)])
            for service in services
            if service.vehicle in present and rates.get((profile, service.id), 0.0) > 0.0)
        rounds.append(RoundState(round_index=r, slot_length=config.slot_length, previous_placement={},
                                 active_nodes=active, services=round_services, traces=round_traces,
                                 profile=profile))
    return rounds


def load_scenario(config):
    """Parse, validate and expand a scenario directory into round states"""
    logger = logging.getLogger(__name__)
    config.validate()
    topology, pricebook, slot_length = read_topology(config.topology_path)
    if config.slot_length != slot_length:
        logger.info(f"Slot length {config.slot_length} s overrides {slot_length} s of {config.topology_path}")

    profile_frame = read_table(config.profiles_path, PROFILE_COLUMNS)
    rates = {(int(row.profile), row.service): float(row.arrival_rate_rps)
             for row in profile_frame.itertuples(index=False)}
    profiles = sorted({profile for profile, _ in rates})

    services = _services_from_table(read_table(config.services_path, SERVICE_COLUMNS), rates)
    mobility_frame = read_table(config.mobility_path, MOBILITY_COLUMNS)
    traces = traces_from_table(mobility_frame)

    validate_scenario(topology, services, list(traces.values()), pricebook, config.slot_length,
                      check_vehicles=bool(traces))
    rounds = build_rounds(config, topology, services, rates, profiles, traces)
    logger.info(f"Loaded {len(rounds)} rounds ({config.regime} routes) from {config.scenario_dir}")
    return LoadedScenario(config=config, topology=topology, pricebook=pricebook, services=tuple(services),
                          rates=rates, profiles=profiles, traces=traces, rounds=rounds)
