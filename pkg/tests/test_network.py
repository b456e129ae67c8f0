import math

import pytest

from conftest import make_topology
from model import GB, UnreachableHostError


def test_path_to_cloud(topology):
    path = topology.path('ap-a', 'cloud-0')
    assert path.path == ('ap-a', 'edge-a', 'switch-0', 'cloud-0')
    assert path.hops == 3
    assert path.delay == pytest.approx(0.021)
    assert path.uplink_rate == 1e9
    assert path.unit_cost == pytest.approx(0.09 / GB)


def test_colocated_fog_has_empty_path(topology):
    path = topology.path('ap-a', 'fog-a')
    assert path.hops == 0
    assert path.delay == 0.0
    assert math.isinf(path.uplink_rate)


def test_paths_are_minimum_hop(topology):
    assert topology.path('fog-a', 'fog-b').path == ('fog-a', 'edge-a', 'edge-b', 'fog-b')
    assert topology.hop_distance('ap-b', 'fog-a') == 3


def test_deployment_unit_cost(topology):
    assert topology.deployment_unit_cost('fog-b') == pytest.approx(0.09 / GB)
    assert topology.deployment_unit_cost('cloud-0') == 0.0


def test_nearest_fog_prefers_colocated(topology):
    assert topology.nearest_fog('ap-a') == 'fog-a'
    assert topology.nearest_fog('ap-a', active_ids={'fog-b'}) == 'fog-b'
    assert topology.nearest_fog('ap-a', active_ids=set()) is None


def test_with_active_keeps_cloud(topology):
    reduced = topology.with_active({'fog-b'})
    active = {node.id for node in reduced.nodes if node.active}
    assert active == {'fog-b', 'cloud-0'}
    assert reduced.path('ap-a', 'cloud-0') == topology.path('ap-a', 'cloud-0')


def test_router_of(topology):
    assert topology.router_of('fog-a').kind == 'edge-router'
    assert topology.router_of('cloud-0').id == 'switch-0'


def test_node_order_and_tiers(topology):
    assert topology.node_ids == ['cloud-0', 'fog-a', 'fog-b']
    assert [node.id for node in topology.fog_nodes] == ['fog-a', 'fog-b']
    assert topology.cloud.id == 'cloud-0'


def test_unreachable_entities():
    topology = make_topology()
    topology.graph.remove_edge('fog-b', 'edge-b')
    assert topology.hop_distance('ap-a', 'fog-b') is None
    assert not topology.reachable('ap-a', 'fog-b')
    with pytest.raises(UnreachableHostError):
        topology.path('ap-a', 'fog-b')
