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

"""Seeded synthetic scenarios: topology, services, IoT profiles and mobility traces.

Two route regimes are generated. ``default`` concentrates vehicles on a few
access points and keeps them in coverage longer; ``optimized`` spreads them
evenly with shorter presence.
"""

import os
import logging
from dataclasses import replace

import numpy as np
import pandas as pd

from config import NETWORK_CONFIG, PRICE_CONFIG, SIMULATION_CONFIG, STORAGE_CONFIG, SYNTH_CONFIG
from model import (CLOUD, FOG, GB, KB, MB, SECONDS_PER_MONTH, AccessPoint, Link, Node, PriceBook,
                   RouterProfile)
from network import Topology
from scenario import MOBILITY_COLUMNS, PROFILE_COLUMNS, SERVICE_COLUMNS, write_table, write_topology
from utils import ensure_directory, gini

GBPS = 1e9
NJ_PER_BIT = 1e-9 * 8.0     # J per byte for each nJ/bit
CLOUD_ID = 'cloud-0'
SWITCH_ID = 'switch-0'


def _uniform(rng, bounds, size=None):
    return rng.uniform(bounds[0], bounds[1], size=size)


def _router(router_id, kind, renewable_ratio):
    profile = NETWORK_CONFIG['routers'][kind]
    return RouterProfile(id=router_id, kind=kind,
                         transfer_power_up=profile['upload_nj_bit'] * NJ_PER_BIT,
                         transfer_power_down=profile['download_nj_bit'] * NJ_PER_BIT,
                         renewable_ratio=renewable_ratio,
                         idle_power=profile['idle_power'], max_power=profile['max_power'])


class ScenarioSynthesizer:
    """Builds every scenario file from a single seed"""

    def __init__(self, seed, settings=None):
        self.logger = logging.getLogger('ScenarioSynthesizer')
        self.seed = seed
        self.settings = dict(SYNTH_CONFIG, **(settings or {}))
        self.rng = np.random.default_rng(seed)

    def _link(self, source, target, tier, delay_ms, uplink_gbps, downlink_gbps):
        unit_cost = _uniform(self.rng, NETWORK_CONFIG['unit_cost_gb'][tier]) / GB
        return Link(source=source, target=target, delay=delay_ms / 1000.0,
                    uplink_rate=uplink_gbps * GBPS, downlink_rate=downlink_gbps * GBPS,
                    unit_cost=float(unit_cost), tier=tier)

    def topology(self):
        """Edge sites (AP, edge router, colocated fog), core routers with extra fog, switch and cloud"""
        s = self.settings
        rng = self.rng
        net = NETWORK_CONFIG
        width, height = s['area_m']
        a, b = net['renewable_beta']
        ap_count = s['access_points']
        core_count = s['core_routers']
        core_fog = s['fog_nodes'] - ap_count
        if core_fog < 0:
            raise ValueError(f"{s['fog_nodes']} fog nodes cannot cover {ap_count} access points")

        core_positions = np.column_stack([_uniform(rng, (0, width), core_count), _uniform(rng, (0, height), core_count)])
        core_ids = [f"core-{k}" for k in range(core_count)]
        routers = [_router(core_id, 'core-router', float(rng.beta(a, b))) for core_id in core_ids]
        routers.append(_router(SWITCH_ID, 'switch', net['cloud_renewable_ratio']))

        machines = s['machines']
        nodes = []
        aps = []
        links = []
        hop = net['hop_delay_ms']
        lte = net['routers']['base-station']
        for m in range(ap_count):
            ratio = float(rng.beta(a, b))
            position = (float(rng.uniform(0, width)), float(rng.uniform(0, height)))
            ap_id, fog_id, edge_id = f"ap-{m:02d}", f"fog-{m:02d}", f"edge-{m:02d}"
            routers.append(_router(edge_id, 'edge-router', ratio))
            nodes.append(self._fog(fog_id, machines[int(rng.integers(len(machines)))], ratio, edge_id))
            aps.append(AccessPoint(
                id=ap_id, position=position, coverage_radius=net['coverage_radius_m'], renewable_ratio=ratio,
                transfer_power_up=lte['upload_nj_bit'] * NJ_PER_BIT,
                transfer_power_down=lte['download_nj_bit'] * NJ_PER_BIT,
                uplink_rate=net['lte_uplink_gbps'] * GBPS, downlink_rate=net['lte_downlink_gbps'] * GBPS,
                colocated_fog=fog_id, attached_router=edge_id, access_delay=net['access_delay_ms'] / 1000.0))
            nearest = int(np.argmin(np.hypot(*(core_positions - np.array(position)).T)))
            links.append(self._link(ap_id, edge_id, 'intra-edge', _uniform(rng, hop['intra-edge']),
                                    net['edge_uplink_gbps'], net['edge_downlink_gbps']))
            links.append(self._link(fog_id, edge_id, 'intra-edge', _uniform(rng, hop['intra-edge']),
                                    net['edge_uplink_gbps'], net['edge_downlink_gbps']))
            links.append(self._link(edge_id, core_ids[nearest], 'core', _uniform(rng, hop['core']),
                                    net['core_uplink_gbps'], net['core_downlink_gbps']))

        for i in range(core_fog):
            core_id = core_ids[i % core_count]
            fog_id = f"fog-{ap_count + i:02d}"
            ratio = float(rng.beta(a, b))
            nodes.append(self._fog(fog_id, machines[int(rng.integers(len(machines)))], ratio, core_id))
            links.append(self._link(fog_id, core_id, 'core', _uniform(rng, hop['core']),
                                    net['core_uplink_gbps'], net['core_downlink_gbps']))

        for k in range(core_count):
            if core_count > 1 and (k + 1 < core_count or core_count > 2):
                links.append(self._link(core_ids[k], core_ids[(k + 1) % core_count], 'core',
                                        _uniform(rng, hop['core']), net['core_uplink_gbps'],
                                        net['core_downlink_gbps']))
            links.append(self._link(core_ids[k], SWITCH_ID, 'cloud', _uniform(rng, net['cloud_delay_ms']),
                                    net['cloud_gbps'], net['cloud_gbps']))
        links.append(self._link(SWITCH_ID, CLOUD_ID, 'cloud', 0.0, net['cloud_gbps'], net['cloud_gbps']))

        cloud = s['cloud_machine']
        nodes.append(Node(id=CLOUD_ID, kind=CLOUD, cpu_capacity=None, ram_capacity=None, storage_capacity=None,
                          unit_count=cloud['cores'], unit_rate=cloud['mips'] / cloud['cores'],
                          idle_power=cloud['idle_power'], max_power=cloud['max_power'],
                          renewable_ratio=net['cloud_renewable_ratio'], pue=net['cloud_pue'],
                          attached_router=SWITCH_ID))
        return Topology(nodes, aps, links, routers)

    @staticmethod
    def _fog(fog_id, machine, ratio, router_id):
        unit_rate = machine['gflops'] * 1000.0 / machine['cores']
        return Node(id=fog_id, kind=FOG, cpu_capacity=machine['cores'] * unit_rate,
                    ram_capacity=machine['memory_gb'] * GB, storage_capacity=machine['storage_gb'] * GB,
                    unit_count=machine['cores'], unit_rate=unit_rate,
                    idle_power=machine['idle_power'], max_power=machine['max_power'],
                    renewable_ratio=ratio, attached_router=router_id)

    def pricebook(self, topology):
        """USD prices; per-MI, per-byte-second and per-kWh units"""
        p = PRICE_CONFIG
        eur = p['eur_to_usd']
        cpu, ram, storage = {}, {}, {}
        for node in topology.nodes:
            router = topology.router_of(node.id)
            behind_core = router is not None and router.kind == 'core-router'
            cpu[node.id] = p['cpu_price_core'] if behind_core else p['cpu_price_edge']
            ram[node.id] = p['ram_price_mb_ms'] * 1000.0 / MB
            storage[node.id] = float(_uniform(self.rng, p['storage_price_gb_month'])) / GB / SECONDS_PER_MONTH
        return PriceBook(cpu_price=cpu, ram_price=ram, storage_price=storage,
                         nonrenewable_energy_price=p['nonrenewable_price_kwh'],
                         renewable_energy_price=p['renewable_price_mwh_eur'] / 1000.0 * eur,
                         carbon_price=p['carbon_price_tonne_eur'] / 1000.0 * eur,
                         emission_rate=p['emission_rate_g_kwh'] / 1000.0)

    def services(self):
        s = self.settings
        rng = self.rng
        count = s['vehicles']
        monthly_price = PRICE_CONFIG['instance_price_hour'] * 730.0
        qos = np.asarray(s['qos_levels'])
        return pd.DataFrame({
            'service': [f"svc-{v:03d}" for v in range(count)],
            'vehicle': [f"veh-{v:03d}" for v in range(count)],
            'cpu_mi': _uniform(rng, s['cpu_demand_mi'], count),
            'ram_bytes': np.round(_uniform(rng, s['ram_demand_mb'], count) * MB),
            'storage_bytes': np.round(_uniform(rng, s['storage_demand_mb'], count) * MB),
            'request_bytes': np.round(_uniform(rng, s['request_kb'], count) * KB),
            'response_bytes': np.round(_uniform(rng, s['response_bytes'], count)),
            'deadline_s': np.full(count, s['deadline_s']),
            'qos': qos[rng.integers(len(qos), size=count)],
            'monthly_price_usd': np.full(count, monthly_price),
        }, columns=SERVICE_COLUMNS)

    def profiles(self, services):
        """Per-profile arrival rates: a base rate per service scaled by a daily traffic curve"""
        s = self.settings
        rng = self.rng
        count = len(services)
        base = _uniform(rng, s['base_rate_rps'], count)
        phase = np.arange(s['profiles']) / s['profiles']
        curve = 1.0 + 0.3 * np.sin(2.0 * np.pi * phase)
        rows = []
        for profile, level in enumerate(curve):
            noise = _uniform(rng, (0.9, 1.1), count)
            for service_id, rate in zip(services['service'], base * level * noise):
                rows.append((profile, service_id, float(rate)))
        return pd.DataFrame(rows, columns=PROFILE_COLUMNS)

    def traces(self, regime, access_points):
        return synth_traces(self.settings['vehicles'], access_points, self.settings['rounds'],
                            self.seed, regime, SIMULATION_CONFIG['slot_length'], self.settings)


def synth_traces(vehicle_count, access_points, rounds, seed, regime='default', slot_length=None, settings=None):
    """Mobility trace table of one route regime

    Every vehicle is present in each round with probability 0.8 and at least
    once overall. A present vehicle visits one to three access points drawn
    from the regime's AP popularity and stays covered for a presence share of
    the round split evenly between them.
    """
    if vehicle_count <= 0 or rounds <= 0 or not access_points:
        raise ValueError("vehicle count, rounds and access points must be positive")
    settings = dict(SYNTH_CONFIG, **(settings or {}))
    if slot_length is None:
        slot_length = SIMULATION_CONFIG['slot_length']
    regimes = list(settings['regimes'])
    params = settings['regimes'][regime]
    rng = np.random.default_rng([seed, regimes.index(regime)])

    ap_ids = sorted(ap.id if hasattr(ap, 'id') else ap for ap in access_points)
    popularity = rng.dirichlet(np.full(len(ap_ids), params["concentration"])) + 1e-9
    popularity /= popularity.sum()
    present = rng.random((rounds, vehicle_count)) < 0.8
    for v in np.flatnonzero(~present.any(axis=0)):
        present[v % rounds, v] = True

    rows = []
    for r in range(rounds):
        for v in np.flatnonzero(present[r]):
            visits = int(rng.integers(1, min(3, len(ap_ids)) + 1))
            chosen = sorted(rng.choice(len(ap_ids), size=visits, replace=False, p=popularity))
            share = _uniform(rng, params['presence']) / visits
            speed = float(_uniform(rng, (3.0, min(15.0, settings['max_speed_mps']))))
            for k in chosen:
                registration = float(_uniform(rng, (0.05, 0.2)))
                wait = float(_uniform(rng, (0.0, 1.0)))
                coverage = speed * (share * slot_length + registration + wait)
                rows.append((r, f"veh-{v:03d}", ap_ids[k], coverage, registration, wait, speed))
    return pd.DataFrame(rows, columns=MOBILITY_COLUMNS)


def ap_vehicle_counts(frame, ap_ids):
    """Vehicle visits per access point over all rounds"""
    counts = frame.groupby('ap')['vehicle'].count()
    return np.array([counts.get(ap_id, 0) for ap_id in sorted(ap_ids)], dtype=float)


def regime_gini(frame, ap_ids):
    return gini(ap_vehicle_counts(frame, ap_ids))


def mean_demand(services, profiles, traces, rounds_per_profile):
    """Average per-round aggregate instruction rate (MI/s) of present vehicles"""
    cpu = dict(zip(services['service'], services['cpu_mi']))
    vehicle_service = dict(zip(services['vehicle'], services['service']))
    rates = {(int(p), svc): rate for p, svc, rate in profiles.itertuples(index=False)}
    profile_count = int(profiles['profile'].max()) + 1 if len(profiles) else 1
    totals = []
    for r, vehicles in traces.groupby('round')['vehicle']:
        profile = min(int(r) // rounds_per_profile, profile_count - 1)
        totals.append(sum(cpu[vehicle_service[v]] * rates.get((profile, vehicle_service[v]), 0.0)
                          for v in set(vehicles)))
    return float(np.mean(totals)) if totals else 0.0


def scale_fog(topology, target_cpu, target_ram):
    """Fog processing and memory scaled so their aggregates hit the targets"""
    fog = topology.fog_nodes
    cpu_scale = target_cpu / sum(node.cpu_capacity for node in fog)
    ram_scale = target_ram / sum(node.ram_capacity for node in fog)
    return topology.with_nodes({
        node.id: replace(node, unit_rate=node.unit_rate * cpu_scale, cpu_capacity=node.cpu_capacity * cpu_scale,
                         ram_capacity=node.ram_capacity * ram_scale)
        for node in fog})


def synth_scenario(out_dir, seed, settings=None):
    """Write a complete scenario directory; returns the written paths"""
    logger = logging.getLogger(__name__)
    ensure_directory(out_dir)
    synthesizer = ScenarioSynthesizer(seed, settings)
    s = synthesizer.settings

    topology = synthesizer.topology()
    pricebook = synthesizer.pricebook(topology)
    services = synthesizer.services()
    profiles = synthesizer.profiles(services)
    traces = {regime: synthesizer.traces(regime, topology.access_points) for regime in s['regimes']}

    per_profile = SIMULATION_CONFIG['rounds_per_profile']
    demand = max(mean_demand(services, profiles, frame, per_profile) for frame in traces.values())
    present_share = max(frame.groupby('round')['vehicle'].nunique().mean() for frame in traces.values()) \
        / len(services)
    ram_demand = float(services['ram_bytes'].sum()) * present_share
    topology = scale_fog(topology, s['fog_capacity_factor'] * demand, s['fog_ram_factor'] * ram_demand)
    logger.info(f"Synthetic fog tier sized to {s['fog_capacity_factor']} x {demand:.6g} MI/s mean demand")

    paths = {
        'topology': os.path.join(out_dir, STORAGE_CONFIG['topology_file']),
        'services': os.path.join(out_dir, STORAGE_CONFIG['services_file']),
        'profiles': os.path.join(out_dir, STORAGE_CONFIG['profiles_file']),
    }
    write_topology(paths['topology'], topology, pricebook, SIMULATION_CONFIG['slot_length'])
    write_table(paths['services'], services)
    write_table(paths['profiles'], profiles)
    ap_ids = [ap.id for ap in topology.access_points]
    for regime, frame in traces.items():
        path = os.path.join(out_dir, STORAGE_CONFIG['mobility_file'].format(regime=regime))
        write_table(path, frame)
        paths[f"mobility_{regime}"] = path
        logger.info(f"{regime} routes: {len(frame)} segments, AP Gini {regime_gini(frame, ap_ids):.3f}")
    return paths
