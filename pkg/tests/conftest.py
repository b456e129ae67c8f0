"""Small hand-built scenarios shared by the tests

Two edge sites (an access point with a colocated fog server behind an edge
router each) and a cloud center behind a switch:

    ap-a - edge-a - fog-a
    ap-b - edge-b - fog-b
    edge-a - edge-b          (core)
    edge-a, edge-b - switch-0 - cloud-0
"""

import os
import sys

import pandas as pd
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from costs import RoundContext
from model import (CLOUD, FOG, GB, KB, MB, AccessPoint, Link, Node, PriceBook, RoundState, RouterProfile,
                   Service)
from mobility import MobilityTrace, Segment
from network import Topology
from scenario import MOBILITY_COLUMNS, PROFILE_COLUMNS, SERVICE_COLUMNS, write_table, write_topology

SLOT = 300.0
GBPS = 1e9


def make_fog(node_id, router, renewable_ratio, units=2, unit_rate=1000.0, ram_gb=1.0, storage_gb=10.0):
    return Node(id=node_id, kind=FOG, cpu_capacity=units * unit_rate, ram_capacity=ram_gb * GB,
                storage_capacity=storage_gb * GB, unit_count=units, unit_rate=unit_rate,
                idle_power=50.0, max_power=150.0, renewable_ratio=renewable_ratio, attached_router=router)


def make_cloud():
    return Node(id='cloud-0', kind=CLOUD, cpu_capacity=None, ram_capacity=None, storage_capacity=None,
                unit_count=4, unit_rate=5000.0, idle_power=57.0, max_power=115.0, renewable_ratio=0.85,
                pue=1.2, attached_router='switch-0')


def make_ap(ap_id, fog_id, router, renewable_ratio):
    return AccessPoint(id=ap_id, position=(0.0, 0.0), coverage_radius=700.0, renewable_ratio=renewable_ratio,
                       transfer_power_up=1e-4, transfer_power_down=6e-4, uplink_rate=12e6, downlink_rate=72e6,
                       colocated_fog=fog_id, attached_router=router)


def make_link(source, target, delay=0.001, tier='intra-edge', unit_cost=0.02 / GB):
    return Link(source=source, target=target, delay=delay, uplink_rate=GBPS, downlink_rate=GBPS,
                unit_cost=unit_cost, tier=tier)


def make_topology(fog_a=None, fog_b=None):
    nodes = [fog_a or make_fog('fog-a', 'edge-a', 0.8), fog_b or make_fog('fog-b', 'edge-b', 0.2), make_cloud()]
    aps = [make_ap('ap-a', 'fog-a', 'edge-a', 0.8), make_ap('ap-b', 'fog-b', 'edge-b', 0.2)]
    routers = [
        RouterProfile(id='edge-a', kind='edge-router', transfer_power_up=3e-7, transfer_power_down=3e-7,
                      renewable_ratio=0.8),
        RouterProfile(id='edge-b', kind='edge-router', transfer_power_up=3e-7, transfer_power_down=3e-7,
                      renewable_ratio=0.2),
        RouterProfile(id='switch-0', kind='switch', transfer_power_up=2.5e-7, transfer_power_down=2.5e-7,
                      renewable_ratio=0.85),
    ]
    links = [
        make_link('ap-a', 'edge-a'),
        make_link('fog-a', 'edge-a'),
        make_link('ap-b', 'edge-b'),
        make_link('fog-b', 'edge-b'),
        make_link('edge-a', 'edge-b', delay=0.002, tier='core', unit_cost=0.04 / GB),
        make_link('edge-a', 'switch-0', delay=0.02, tier='cloud', unit_cost=0.07 / GB),
        make_link('edge-b', 'switch-0', delay=0.02, tier='cloud', unit_cost=0.07 / GB),
        make_link('switch-0', 'cloud-0', delay=0.0, tier='cloud', unit_cost=0.0),
    ]
    return Topology(nodes, aps, links, routers)


def make_pricebook(topology, cloud_cpu_price=0.6e-6):
    cpu = {node.id: (cloud_cpu_price if node.is_cloud else 0.6e-6) for node in topology.nodes}
    ram = {node.id: 21e-10 / 128 * 1000.0 / MB for node in topology.nodes}
    storage = {node.id: 0.022 / GB / (730 * 3600) for node in topology.nodes}
    return PriceBook(cpu_price=cpu, ram_price=ram, storage_price=storage, nonrenewable_energy_price=0.905,
                     renewable_energy_price=0.3175, carbon_price=0.01865, emission_rate=0.38)


def make_service(index, cpu_demand=10.0, arrival_rate=5.0, ram_mb=100.0, storage_mb=200.0, deadline=0.5,
                 qos=0.95, violation_unit_cost=1e-6):
    return Service(id=f"svc-{index}", vehicle=f"veh-{index}", cpu_demand=cpu_demand, ram_demand=ram_mb * MB,
                   storage_demand=storage_mb * MB, request_size=10 * KB, response_size=16.0,
                   arrival_rate=arrival_rate, deadline=deadline, qos_level=qos,
                   violation_unit_cost=violation_unit_cost)


def make_trace(vehicle, aps, speed=10.0, share=0.8, round_index=0):
    """A vehicle covered by each AP in ``aps`` for ``share`` of the round in total"""
    segments = tuple(Segment(ap=ap, coverage_length=speed * SLOT * share / len(aps), registration_time=0.0,
                             wait_time=0.0) for ap in aps)
    return MobilityTrace(vehicle=vehicle, speed=speed, segments=segments, round_index=round_index)


def make_state(services, traces, topology, round_index=0, previous=None, slot_length=SLOT):
    return RoundState(round_index=round_index, slot_length=slot_length, previous_placement=previous or {},
                      active_nodes=frozenset(node.id for node in topology.nodes if node.active),
                      services=tuple(services), traces=tuple(traces))


def make_context(services, traces, topology=None, round_index=0, previous=None, utilization_cap=0.9,
                 pricebook=None, slot_length=SLOT):
    topology = topology or make_topology()
    state = make_state(services, traces, topology, round_index, previous, slot_length)
    return RoundContext(topology, pricebook or make_pricebook(topology), state, startup_delay=0.05,
                        utilization_cap=utilization_cap)


@pytest.fixture
def topology():
    return make_topology()


@pytest.fixture
def pricebook(topology):
    return make_pricebook(topology)


@pytest.fixture
def services():
    return [make_service(i) for i in range(4)]


@pytest.fixture
def traces():
    return [make_trace('veh-0', ['ap-a']), make_trace('veh-1', ['ap-a']),
            make_trace('veh-2', ['ap-b']), make_trace('veh-3', ['ap-a', 'ap-b'])]


@pytest.fixture
def ctx(services, traces, topology):
    return make_context(services, traces, topology)


def write_scenario(directory, topology=None, services=None, profiles=2, rounds=6, empty_mobility=False):
    """Scenario directory with both route regimes; returns the directory"""
    topology = topology or make_topology()
    services = services or [make_service(i) for i in range(4)]
    os.makedirs(directory, exist_ok=True)
    write_topology(os.path.join(directory, 'topology.json'), topology, make_pricebook(topology), SLOT)

    write_table(os.path.join(directory, 'services.csv'), pd.DataFrame([{
        'service': s.id, 'vehicle': s.vehicle, 'cpu_mi': s.cpu_demand, 'ram_bytes': s.ram_demand,
        'storage_bytes': s.storage_demand, 'request_bytes': s.request_size, 'response_bytes': s.response_size,
        'deadline_s': s.deadline, 'qos': s.qos_level, 'monthly_price_usd': 4.234,
    } for s in services], columns=SERVICE_COLUMNS))

    write_table(os.path.join(directory, 'iot_profiles.csv'), pd.DataFrame([
        {'profile': p, 'service': s.id, 'arrival_rate_rps': s.arrival_rate * (1.0 + 0.1 * p)}
        for p in range(profiles) for s in services], columns=PROFILE_COLUMNS))

    aps = ['ap-a', 'ap-b']
    for regime in ('default', 'optimized'):
        rows = []
        if not empty_mobility:
            for r in range(rounds):
                for i, s in enumerate(services):
                    ap = aps[0] if regime == 'default' else aps[(i + r) % 2]
                    rows.append({'round': r, 'vehicle': s.vehicle, 'ap': ap, 'coverage_m': 2400.0,
                                 'reg_time_s': 0.0, 'wait_s': 0.0, 'speed_mps': 10.0})
        write_table(os.path.join(directory, f"mobility_{regime}.csv"),
                    pd.DataFrame(rows, columns=MOBILITY_COLUMNS))
    return directory


@pytest.fixture
def scenario_dir(tmp_path):
    return write_scenario(str(tmp_path / 'scenario'))
