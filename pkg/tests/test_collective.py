import pytest

from collective import build_tree, complexity_probe, optimize
from objectives import INCENTIVE, MIN_VAR, Objective
from plans import CapacityTable, generate_all_plans, loads_feasible


@pytest.fixture
def plans(ctx):
    return generate_all_plans(ctx, count=6, seed=11)


@pytest.mark.parametrize("count, branching, height", [(64, 2, 6), (7, 2, 2), (8, 2, 3), (1, 2, 0), (21, 4, 2)])
def test_tree_height(count, branching, height):
    overlay = build_tree([f"fog-{i:02d}" for i in range(count)], branching, seed=3)
    assert overlay.height == height


def test_tree_levels_cover_each_agent_once():
    agents = [f"fog-{i:02d}" for i in range(10)]
    overlay = build_tree(agents, 3, seed=1)
    levels = overlay.levels()
    assert levels[-1] == [overlay.root]
    assert sorted(agent for level in levels for agent in level) == agents
    for agent, up in overlay.parent.items():
        assert overlay.depth[agent] == overlay.depth[up] + 1
        assert agent in overlay.children[up]
        assert len(overlay.children[up]) <= 3


def test_tree_is_seeded():
    agents = [f"fog-{i:02d}" for i in range(12)]
    assert build_tree(agents, 2, seed=5).order == build_tree(list(reversed(agents)), 2, seed=5).order


def test_tree_arguments():
    with pytest.raises(ValueError):
        build_tree(['fog-a'], 0)
    with pytest.raises(ValueError):
        build_tree([], 2)


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_combined_cost_never_increases(plans, ctx, lam):
    table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
    overlay = build_tree(plans, 2, seed=0)
    result = optimize(plans, overlay, lam=lam, objective=Objective(MIN_VAR, ctx.topology), table=table)
    costs = [record.combined_cost for record in result.records]
    assert all(later <= earlier for earlier, later in zip(costs, costs[1:]))
    selected = result.selected_plans(plans)
    total = None
    for plan in selected.values():
        total = plan.loads if total is None else total + plan.loads
    assert loads_feasible(total, table)


def test_local_only_weighting_keeps_cheapest_plans(plans, ctx):
    overlay = build_tree(plans, 2, seed=0)
    result = optimize(plans, overlay, lam=1.0, objective=Objective(MIN_VAR, ctx.topology))
    assert result.selections == {agent: 0 for agent in plans}


def test_single_agent_minimizes_objective(plans, ctx):
    objective = Objective(INCENTIVE, ctx.topology)
    single = {'fog-a': plans['fog-a']}
    result = optimize(single, build_tree(single, 2), lam=0.0, objective=objective)
    chosen = single['fog-a'][result.selections['fog-a']]
    assert objective(chosen.utilization) == min(objective(plan.utilization) for plan in single['fog-a'])


def test_evaluations_count_every_plan_each_iteration(plans, ctx):
    overlay = build_tree(plans, 2, seed=0)
    result = optimize(plans, overlay, lam=0.5, objective=Objective(MIN_VAR, ctx.topology), max_iterations=4)
    iterations = len(result.records) - 1
    assert 1 <= iterations <= 4
    assert result.evaluations == iterations * sum(len(options) for options in plans.values())
    assert result.final.selections == result.selections


def test_invalid_arguments(plans, ctx):
    overlay = build_tree(plans, 2)
    objective = Objective(MIN_VAR, ctx.topology)
    with pytest.raises(ValueError):
        optimize(plans, overlay, lam=1.5, objective=objective)
    with pytest.raises(ValueError):
        optimize(plans, build_tree(['fog-a'], 2), objective=objective)


def test_complexity_probe_is_linear_in_agents():
    samples, r_squared = complexity_probe([8, 16, 32, 64], plans_per_agent=4, iterations=3, branching=2, seed=2)
    assert [sample.depth for sample in samples] == [3, 4, 5, 6]
    assert all(sample.iterations == 3 for sample in samples)
    assert [sample.evaluations for sample in samples] == [3 * 4 * count for count in (8, 16, 32, 64)]
    assert r_squared == pytest.approx(1.0)


def test_zero_iterations_keeps_initial_selection(plans, ctx):
    overlay = build_tree(plans, 2, seed=0)
    result = optimize(plans, overlay, lam=0.5, objective=Objective(MIN_VAR, ctx.topology), max_iterations=0)
    assert len(result.records) == 1
    assert result.evaluations == 0
    with pytest.raises(ValueError):
        optimize(plans, overlay, objective=Objective(MIN_VAR, ctx.topology), max_iterations=-1)


def test_initial_selection_is_the_reference_placement(ctx):
    table = CapacityTable(ctx.topology, ctx.utilization_cap, ctx.active_nodes)
    objective = Objective(MIN_VAR, ctx.topology)
    plans = generate_all_plans(ctx, count=6, seed=11, table=table, objective=objective)
    result = optimize(plans, build_tree(plans, 2, seed=0), lam=0.5, objective=objective, max_iterations=0,
                      table=table)
    initial = result.records[0].selections
    assert all(plans[agent][index].reference for agent, index in initial.items())
