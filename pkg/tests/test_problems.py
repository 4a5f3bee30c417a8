import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import DATA, enumerate_schedules
from cwsopt.objectives import ObjectiveSpec
from cwsopt.problems import (
    ARC_SPACE,
    DENT_SPACE,
    BoxSpace,
    GridDecision,
    GridInstance,
    GridSpace,
    InstanceError,
    analytic_front,
    arc_evaluate,
    arc_evaluate_batch,
    dent_evaluate,
    dent_evaluate_batch,
    dent_h,
    grid_bounds,
    grid_evaluate,
    grid_problem,
    grid_schedule,
    load_grid_instance,
    make_problem,
)
from cwsopt.scalarizers import CwsAssessor, CwsConfig, WeightedSumAssessor


def single_op_instance(durations, costs, due_date):
    machines = [
        {"name": f"M{i}", "durations": {"o": d}, "costs": {"o": c}} for i, (d, c) in enumerate(zip(durations, costs))
    ]
    job = {"name": "J", "operations": [{"id": "o", "machines": [m["name"] for m in machines]}], "due_date": due_date}
    return GridInstance.from_dict({"machines": machines, "jobs": [job]})


class TestBoxSpace:
    def test_contains(self):
        assert ARC_SPACE.contains((0.0, 1.0))
        assert not ARC_SPACE.contains((2.0, 0.5))
        assert not ARC_SPACE.contains((0.5,))

    def test_grid_covers_corners(self):
        g = BoxSpace((0.0, 0.0), (1.0, 2.0)).grid((3, 2))
        assert g.shape == (6, 2)
        assert g.tolist()[0] == [0.0, 0.0] and g.tolist()[-1] == [1.0, 2.0]

    def test_sample_inside(self, rng):
        for _ in range(100):
            assert DENT_SPACE.contains(DENT_SPACE.sample(rng))


class TestArc:
    def test_angle_zero(self):
        assert arc_evaluate((0.0, 1.0)).tolist() == [1.0, 0.0]

    def test_diagonal(self):
        np.testing.assert_allclose(arc_evaluate((math.pi / 4, 1.0)), [math.sqrt(2) / 2] * 2, atol=1e-15)

    def test_out_of_box(self):
        with pytest.raises(ValueError):
            arc_evaluate((0.0, 1.5))
        with pytest.raises(ValueError):
            arc_evaluate((-0.1, 0.5))

    def test_batch_matches_single(self, rng):
        d = np.array([ARC_SPACE.sample(rng) for _ in range(50)])
        np.testing.assert_array_equal(arc_evaluate_batch(d), [arc_evaluate(x) for x in d])

    @pytest.mark.parametrize("w1", [0.1, 0.25, 0.5, 0.8, 0.95])
    def test_weighted_sum_tangency_by_dense_grid(self, w1):
        w = np.array([w1, 1 - w1])
        xs = np.linspace(0.0, math.pi / 2, 200_001)
        f = np.stack([np.cos(xs), np.sin(xs)], axis=1)
        best = f[np.argmax(f @ w)]
        np.testing.assert_allclose(best, w / np.linalg.norm(w), atol=1e-5)


class TestDent:
    def test_left_end(self):
        assert dent_evaluate((0.0, 1.0)).tolist() == [0.0, 1.0]

    def test_midpoint(self):
        np.testing.assert_allclose(dent_evaluate((0.5, 1.0)), [0.5, 0.5], atol=1e-15)

    def test_h_endpoints_and_reference_values(self):
        assert dent_h(0.0) == 1.0
        assert dent_h(1.0) == pytest.approx(0.0, abs=1e-15)
        assert dent_h(0.75) == pytest.approx(0.4, abs=1e-15)
        assert dent_h(0.45) == pytest.approx(0.503647450843758, abs=1e-14)

    def test_h_strictly_decreasing(self):
        xs = np.linspace(0, 1, 100_001)
        assert np.all(np.diff(dent_h(xs)) < 0)

    def test_h_convex_on_left_half(self):
        xs = np.linspace(0.001, 0.499, 999)
        second = np.diff(dent_h(xs), 2)
        assert np.all(second > 0)

    def test_out_of_box(self):
        with pytest.raises(ValueError):
            dent_evaluate((1.2, 0.5))

    def test_batch_matches_single(self, rng):
        d = np.array([DENT_SPACE.sample(rng) for _ in range(50)])
        np.testing.assert_array_equal(dent_evaluate_batch(d), [dent_evaluate(x) for x in d])

    def test_weight_sweep_never_reaches_dent(self):
        # plain numpy sweep: maximize w1 x + w2 h(x) on the front for w1 in 0.001..0.999
        xs = np.linspace(0, 1, 10_001)
        front = np.stack([xs, dent_h(xs)], axis=1)
        reached = []
        for w1 in np.arange(1, 1000) / 1000:
            reached.append(xs[np.argmax(front @ np.array([w1, 1 - w1]))])
        reached = np.array(reached)
        assert not np.any((reached >= 0.1) & (reached <= 0.4))
        assert reached.min() == 0.0 and reached.max() == 1.0

    def test_weighted_sum_assessor_matches_sweep(self):
        problem = make_problem("dent")
        grid = DENT_SPACE.grid((1001, 3))
        f, _ = problem.evaluate_batch(grid)
        for w1 in (0.2, 0.5, 0.6, 0.8):
            specs = tuple(
                ObjectiveSpec(s.name, s.direction, 0.0, 1.0, weight=w) for s, w in zip(problem.objectives, (w1, 1 - w1))
            )
            q = WeightedSumAssessor(specs).quality_batch(f, np.zeros((len(f), 0)))
            x = f[np.argmax(q), 0]
            assert not 0.1 <= x <= 0.4

    def test_cws_threshold_on_f2_reaches_interior_of_dent(self):
        problem = make_problem("dent")
        eps = float(dent_h(0.45))
        specs = (
            ObjectiveSpec("f1", problem.objectives[0].direction, 0, 1, weight=0.7, priority=2),
            ObjectiveSpec("f2", problem.objectives[1].direction, 0, 1, weight=0.3, priority=1, threshold=eps),
        )
        assessor = CwsAssessor(CwsConfig.from_specs(specs))
        grid = DENT_SPACE.grid((2001, 11))
        f, v = problem.evaluate_batch(grid)
        best = f[np.argmax(assessor.quality_batch(f, v))]
        assert best[0] == pytest.approx(0.45, abs=1e-3)


class TestAnalyticFront:
    def test_arc_start(self):
        np.testing.assert_allclose(analytic_front("arc", 0.0), [1.0, 0.0])

    def test_dent_end(self):
        np.testing.assert_allclose(analytic_front("dent", 1.0), [1.0, 0.0], atol=1e-15)

    def test_parameter_range(self):
        with pytest.raises(ValueError):
            analytic_front("arc", 1.5)

    def test_unknown_problem(self):
        with pytest.raises(ValueError):
            analytic_front("grid", 0.5)

    @pytest.mark.parametrize("name", ["arc", "dent"])
    def test_front_not_dominated_by_random_feasible_points(self, name, rng):
        problem = make_problem(name)
        space = problem.space
        samples = rng.uniform(space.lower, space.upper, size=(10_000, 2))
        f, _ = problem.evaluate_batch(samples)
        for t in np.linspace(0, 1, 41):
            p = analytic_front(name, t)
            ge = np.all(f >= p, axis=1) & np.any(f > p, axis=1)
            assert not np.any(ge)


class TestGridInstance:
    def test_roundtrip(self, grid_instance):
        assert GridInstance.from_dict(grid_instance.to_dict()) == grid_instance

    def test_load(self, grid_instance_path, grid_instance):
        assert load_grid_instance(grid_instance_path) == grid_instance

    def test_operation_needs_machine(self):
        with pytest.raises(InstanceError):
            GridInstance.from_dict(
                {
                    "machines": [{"name": "M", "durations": {"o": 1}, "costs": {"o": 1}}],
                    "jobs": [{"name": "J", "operations": [{"id": "o", "machines": []}], "due_date": 1}],
                }
            )

    def test_positive_durations(self):
        with pytest.raises(InstanceError):
            single_op_instance([0.0], [1.0], 5)

    def test_malformed(self):
        with pytest.raises(InstanceError):
            GridInstance.from_dict({"jobs": []})


class TestGridBounds:
    def test_single_operation(self):
        b = grid_bounds(single_op_instance([2, 5], [10, 4], 9))
        j = b.jobs[0]
        assert (j.time_min, j.time_max, j.cost_min, j.cost_max) == (2, 5, 4, 10)
        assert (b.makespan_lower, b.makespan_upper) == (2, 5)

    def test_chain_sums_fastest(self):
        machines = [{"name": "M", "durations": {"a": 2, "b": 2}, "costs": {"a": 1, "b": 1}}]
        job = {"name": "J", "operations": [{"id": "a", "machines": ["M"]}, {"id": "b", "machines": ["M"]}], "due_date": 9}
        b = grid_bounds(GridInstance.from_dict({"machines": machines, "jobs": [job]}))
        assert b.jobs[0].time_min == 4

    def test_two_by_two(self, grid_instance):
        b = grid_bounds(grid_instance)
        a, bb = b.jobs
        assert (a.time_min, a.time_max, a.cost_min, a.cost_max) == (5, 9, 4, 11)
        assert (bb.time_min, bb.time_max, bb.cost_min, bb.cost_max) == (3, 5, 4, 11)
        assert (b.makespan_lower, b.makespan_upper) == (5, 7)

    def test_every_schedule_respects_bounds(self, grid_instance):
        b = grid_bounds(grid_instance)
        count = 0
        for assignment, order in enumerate_schedules(grid_instance):
            s = grid_schedule(grid_instance, GridDecision(assignment, order))
            for jb, proc, done, cost in zip(b.jobs, s.job_processing, s.job_completion, s.job_cost):
                assert jb.time_min <= proc <= jb.time_max
                assert done >= jb.time_min
                assert jb.cost_min <= cost <= jb.cost_max
            assert s.makespan >= b.makespan_lower
            count += 1
        assert count == 384


class TestGridEvaluate:
    def test_single_operation_on_time(self):
        inst = single_op_instance([3], [1], 5)
        f, v = grid_evaluate(inst, GridDecision((0,), (0,)))
        assert f[2] == 3 and f[3] == 1
        assert v.tolist() == [0, 0]

    def test_single_operation_late(self):
        inst = single_op_instance([3], [1], 2)
        _, v = grid_evaluate(inst, GridDecision((0,), (0,)))
        assert v.tolist() == [1, 1]

    def test_all_on_first_machine(self, grid_instance):
        f, v = grid_evaluate(grid_instance, GridDecision((0, 0, 0, 0), (0, 1, 2, 3)))
        np.testing.assert_allclose(f, [1.25, 1.0, 8.0, 0.5])
        assert v.tolist() == [1, 2]

    def test_split_machines(self, grid_instance):
        f, v = grid_evaluate(grid_instance, GridDecision((1, 1, 0, 0), (2, 0, 3, 1)))
        np.testing.assert_allclose(f, [0.5, 0.5, 9.0, 2 / 3])
        assert v.tolist() == [1, 1]

    def test_order_cannot_break_chain(self, grid_instance):
        s = grid_schedule(grid_instance, GridDecision((0, 0, 0, 0), (1, 0, 3, 2)))
        assert s.start[0] < s.start[1] and s.start[2] < s.start[3]
        assert s.end[0] <= s.start[1]

    def test_inadmissible_machine(self, grid_instance):
        with pytest.raises(InstanceError):
            grid_evaluate(grid_instance, GridDecision((0, 0, 0, 7), (0, 1, 2, 3)))

    def test_malformed_order(self, grid_instance):
        with pytest.raises(InstanceError):
            grid_evaluate(grid_instance, GridDecision((0, 0, 0, 0), (0, 1, 1, 3)))

    def test_utilization_in_unit_interval(self, grid_instance):
        for assignment, order in enumerate_schedules(grid_instance):
            f, v = grid_evaluate(grid_instance, GridDecision(assignment, order))
            assert 0 < f[3] <= 1
            assert np.all(v >= 0)

    @given(st.integers(0, 2**32 - 1))
    def test_sampled_decisions_are_valid(self, seed):
        inst = load_grid_instance(DATA / "grid_2x2.json")
        space = GridSpace(inst)
        d = space.sample(np.random.default_rng(seed))
        assert space.contains(d)
        grid_evaluate(inst, d)


class TestProblemFactory:
    def test_names(self, grid_instance):
        assert make_problem("ARC").name == "arc"
        assert make_problem("dent").k == 2
        assert make_problem("grid", grid_instance).k == 4

    def test_grid_needs_instance(self):
        with pytest.raises(ValueError):
            make_problem("grid")

    def test_unknown(self):
        with pytest.raises(ValueError):
            make_problem("zdt1")

    def test_grid_defaults_form_valid_cws(self, grid_instance):
        problem = grid_problem(grid_instance)
        cfg = CwsConfig.from_specs(problem.objectives)
        assert cfg.group_sizes == (2, 2)
        assert len(problem.default_penalties) == len(problem.violation_names) == 2
