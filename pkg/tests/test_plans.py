import itertools

import numpy as np
import pytest

from conftest import make_context, make_fog, make_service, make_topology, make_trace
from costs import total_local_cost
from objectives import INCENTIVE, MIN_VAR, Objective
from plans import (CapacityTable, PlanGenerator, feasibility_check, generate_all_plans, generate_plans,
                   host_loads, loads_feasible, reference_placement, services_by_agent)


def random_instance(seed):
    rng = np.random.default_rng(seed)
    count = int(rng.integers(1, 4))
    services = [make_service(i, cpu_demand=float(rng.uniform(5.0, 60.0)), arrival_rate=float(rng.uniform(1.0, 20.0)),
                             ram_mb=float(rng.uniform(50.0, 600.0)), deadline=float(rng.uniform(0.02, 0.1)))
                for i in range(count)]
    traces = []
    for service in services:
        aps = rng.choice(['ap-a', 'ap-b'], size=int(rng.integers(1, 3)), replace=False)
        traces.append(make_trace(service.vehicle, [str(ap) for ap in aps], share=float(rng.uniform(0.3, 1.0))))
    return make_context(services, traces, round_index=int(rng.integers(0, 2)))


def exhaustive_minimum(ctx, table, candidates):
    best = None
    for hosts in itertools.product(*candidates.values()):
        assignment = dict(zip(candidates, hosts))
        if feasibility_check(assignment, ctx.topology, ctx.services, table=table):
            continue
        cost = total_local_cost(assignment, ctx).total
        if best is None or cost < best:
            best = cost
    return best


@pytest.mark.parametrize("seed", range(200))
def test_first_plan_is_exhaustive_minimum(seed):
    ctx = random_instance(seed)
    table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
    generator = PlanGenerator(ctx, table, seed=seed)
    candidates = {sid: generator.candidate_hosts('fog-a', sid) for sid in ctx.service_ids}
    plans = generator.generate('fog-a', ctx.service_ids, count=20)
    assert plans[0].local_cost == pytest.approx(exhaustive_minimum(ctx, table, candidates), rel=1e-12)


def test_plans_are_feasible_distinct_and_sorted(ctx):
    table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
    plans = generate_plans('fog-a', ['svc-0', 'svc-1', 'svc-3'], ctx, count=20, seed=1, table=table)
    assert len({plan.assignment for plan in plans}) == len(plans)
    costs = [plan.local_cost for plan in plans]
    assert costs == sorted(costs)
    for plan in plans:
        assert feasibility_check(plan.mapping, ctx.topology, ctx.services, table=table) == []
    assert any(set(plan.mapping.values()) == {'cloud-0'} for plan in plans)


def test_duplicate_assignments_collapse(ctx):
    plans = generate_plans('fog-b', ['svc-2'], ctx, count=20, seed=3)
    assert 1 <= len(plans) <= 3
    assert len({plan.assignment for plan in plans}) == len(plans)


def test_count_limits_plans_and_keeps_cloud(ctx):
    plans = generate_plans('fog-a', ['svc-0', 'svc-1', 'svc-3'], ctx, count=2, seed=1)
    assert len(plans) == 2
    assert any(set(plan.mapping.values()) == {'cloud-0'} for plan in plans)


def test_uncovered_service_goes_to_cloud():
    service = make_service(0)
    ctx = make_context([service], [make_trace('veh-0', ['ap-a'], share=0.0)])
    assert 'svc-0' in ctx.cloud_only
    plans = generate_plans('fog-a', ['svc-0'], ctx, count=20, seed=0)
    assert len(plans) == 1
    assert plans[0].mapping == {'svc-0': 'cloud-0'}


def test_same_seed_same_plans(ctx):
    first = generate_plans('fog-a', ['svc-0', 'svc-1', 'svc-3'], ctx, count=10, seed=42)
    second = generate_plans('fog-a', ['svc-0', 'svc-1', 'svc-3'], ctx, count=10, seed=42)
    assert [plan.assignment for plan in first] == [plan.assignment for plan in second]
    assert [plan.local_cost for plan in first] == [plan.local_cost for plan in second]


def test_invalid_count(ctx):
    with pytest.raises(ValueError):
        generate_plans('fog-a', ['svc-0'], ctx, count=0)


def test_agents_receive_services_of_their_access_points(ctx):
    assert services_by_agent(ctx) == {'fog-a': ['svc-0', 'svc-1', 'svc-3'], 'fog-b': ['svc-2']}


def test_parallel_generation_matches_serial(ctx):
    serial = generate_all_plans(ctx, count=8, seed=5, workers=1)
    parallel = generate_all_plans(ctx, count=8, seed=5, workers=3)
    assert list(serial) == list(parallel)
    for agent in serial:
        assert [p.assignment for p in serial[agent]] == [p.assignment for p in parallel[agent]]


def test_utilization_vector_layout(ctx):
    table = CapacityTable(ctx.topology, 1.0)
    loads = host_loads({'svc-0': 'fog-a', 'svc-2': 'cloud-0'}, table, ctx.services)
    g = loads.utilization(table)
    # node order cloud-0, fog-a, fog-b; the cloud is measured against one 4 x 5000 MIPS machine
    assert g[0] == pytest.approx(50.0 / 20000.0)
    assert g[1] == 0.0
    assert g[2] == pytest.approx(50.0 / 2000.0)
    assert g[3] == pytest.approx(100.0 / 1024.0)
    assert g[4] == 0.0 and g[5] == 0.0


class TestFeasibility:

    def test_single_service_fits(self, topology):
        assert feasibility_check({'svc-0': 'fog-a'}, topology, [make_service(0)]) == []

    def test_ram_overflow(self, topology):
        services = [make_service(0, ram_mb=600.0), make_service(1, ram_mb=600.0)]
        violations = feasibility_check({'svc-0': 'fog-a', 'svc-1': 'fog-a'}, topology, services)
        assert len(violations) == 1 and 'RAM capacity' in violations[0]

    def test_ram_bound_is_strict(self, topology):
        services = [make_service(0, ram_mb=512.0), make_service(1, ram_mb=512.0)]
        assert feasibility_check({'svc-0': 'fog-a', 'svc-1': 'fog-a'}, topology, services)

    def test_saturated_share_is_unstable(self, topology):
        service = make_service(0, cpu_demand=100.0, arrival_rate=20.0)
        violations = feasibility_check({'svc-0': 'fog-a'}, topology, [service])
        assert any('unstable' in violation for violation in violations)

    def test_utilization_cap(self, topology):
        services = [make_service(i, cpu_demand=10.0, arrival_rate=10.0, ram_mb=10.0) for i in range(19)]
        assignment = {s.id: 'fog-a' for s in services}
        assert feasibility_check(assignment, topology, services, utilization_cap=1.0) == []
        violations = feasibility_check(assignment, topology, services, utilization_cap=0.9)
        assert any('above cap' in violation for violation in violations)

    def test_double_placement(self, topology):
        violations = feasibility_check([('svc-0', 'fog-a'), ('svc-0', 'fog-b')], topology, [make_service(0)])
        assert violations == ['svc-0: placed on both fog-a and fog-b']

    def test_deactivated_host(self):
        topology = make_topology().with_active({'fog-b'})
        violations = feasibility_check({'svc-0': 'fog-a'}, topology, [make_service(0)])
        assert violations == ['fog-a: node is deactivated']

    def test_cloud_is_never_full(self, topology):
        services = [make_service(i, ram_mb=900.0) for i in range(10)]
        assert feasibility_check({s.id: 'cloud-0' for s in services}, topology, services) == []


def test_zero_diversification_depth_is_rejected(ctx):
    table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
    with pytest.raises(ValueError):
        PlanGenerator(ctx, table, diversification_depth=0)


class TestReferencePlacement:

    @staticmethod
    def wide_fog_context(units, deadline=0.5):
        topology = make_topology(fog_a=make_fog('fog-a', 'edge-a', 0.8, units=units, unit_rate=5000.0),
                                 fog_b=make_fog('fog-b', 'edge-b', 0.2, units=units, unit_rate=5000.0))
        services = [make_service(i, cpu_demand=100.0, arrival_rate=5.0, deadline=deadline) for i in range(4)]
        traces = [make_trace(f"veh-{i}", ['ap-a']) for i in range(4)]
        return make_context(services, traces, topology)

    def test_min_var_levels_node_shares(self):
        ctx = self.wide_fog_context(units=8)
        table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
        candidates = {sid: ['fog-a', 'fog-b', 'cloud-0'] for sid in ctx.service_ids}
        placement = reference_placement(ctx, table, Objective(MIN_VAR, ctx.topology), candidates)
        # 500 MI/s each: 0.0125 of a 40000 MIPS fog, 0.025 of the 20000 MIPS cloud machine
        assert placement == {'svc-0': 'fog-a', 'svc-1': 'fog-b', 'svc-2': 'cloud-0', 'svc-3': 'fog-a'}
        assert feasibility_check(placement, ctx.topology, ctx.services, table=table) == []

    def test_deadline_safe_host_wins_within_tolerance(self):
        candidates = {'svc-0': ['fog-a', 'cloud-0']}
        relaxed = self.wide_fog_context(units=3)
        table = CapacityTable(relaxed.topology, relaxed.utilization_cap, relaxed.active_nodes)
        objective = Objective(MIN_VAR, relaxed.topology)
        assert reference_placement(relaxed, table, objective, candidates) == {'svc-0': 'cloud-0'}
        strict = self.wide_fog_context(units=3, deadline=0.03)
        assert reference_placement(strict, table, objective, candidates) == {'svc-0': 'fog-a'}

    def test_incentive_fills_renewable_nodes_first(self):
        ctx = self.wide_fog_context(units=8)
        table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
        candidates = {sid: ['fog-a', 'fog-b'] for sid in ctx.service_ids}
        placement = reference_placement(ctx, table, Objective(INCENTIVE, ctx.topology), candidates)
        assert set(placement.values()) == {'fog-a'}

    def test_agents_start_from_reference_slices(self, ctx):
        table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
        objective = Objective(MIN_VAR, ctx.topology)
        plans = generate_all_plans(ctx, count=2, seed=1, table=table, objective=objective)
        total = None
        for agent, options in plans.items():
            references = [plan for plan in options if plan.reference]
            assert len(references) == 1
            assert any(set(plan.mapping.values()) == {'cloud-0'} for plan in options)
            total = references[0].loads if total is None else total + references[0].loads
        assert loads_feasible(total, table)

    def test_diversified_plans_fit_next_to_other_agents(self, ctx):
        table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
        plans = generate_all_plans(ctx, count=8, seed=2, table=table, objective=Objective(MIN_VAR, ctx.topology))
        for agent, options in plans.items():
            others = [next(plan for plan in plans[other] if plan.reference) for other in plans if other != agent]
            background = sum((plan.loads for plan in others[1:]), others[0].loads) if others else None
            for plan in options[1:]:
                if plan.reference or background is None:
                    continue
                assert feasibility_check(plan.mapping, ctx.topology, ctx.services, table=table,
                                         background=background) == []
