import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import (
    oracle_dominates,
    oracle_epsilon_pareto,
    oracle_non_dominated,
    oracle_ranks,
    oracle_weakly_non_dominated,
    random_point_set,
)
from cwsopt.objectives import Direction, ObjectiveSpec
from cwsopt.pareto import (
    INT64_MAX,
    ConstrainedPoint,
    ObjectiveVector,
    ParetoRankAssessor,
    constrained_dominates,
    dominates,
    format_float,
    front_budget,
    ideal_vector,
    non_dominated_filter,
    non_dominated_mask,
    pareto_rank,
    read_points_csv,
    verify_pareto_via_epsilon,
    weakly_non_dominated_filter,
    weakly_non_dominated_mask,
    write_front_csv,
)
from cwsopt.scalarizers import PenaltySpec

point_sets = st.integers(2, 4).flatmap(
    lambda k: arrays(np.float64, st.tuples(st.integers(1, 30), st.just(k)), elements=st.integers(0, 4).map(float))
)


def cp(values, violations=()):
    return ConstrainedPoint(ObjectiveVector.from_raw(values), tuple(violations))


class TestDominance:
    def test_strictly_better_once(self):
        assert dominates((3, 4), (3, 2))

    def test_equal_vectors(self):
        assert not dominates((3, 4), (3, 4))

    def test_incomparable(self):
        assert not dominates((3, 4), (4, 3))
        assert not dominates((4, 3), (3, 4))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dominates((1, 2), (1, 2, 3))

    def test_minimized_objective_is_flipped(self):
        a = ObjectiveVector.from_raw((5.0, 1.0), (Direction.MAXIMIZE, Direction.MINIMIZE))
        b = ObjectiveVector.from_raw((5.0, 2.0), (Direction.MAXIMIZE, Direction.MINIMIZE))
        assert dominates(a, b)
        assert a.raw == (5.0, 1.0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            ObjectiveVector.from_raw((1.0, float("nan")))

    @given(point_sets)
    def test_matches_oracle(self, m):
        for a in m[:5]:
            for b in m[:5]:
                assert dominates(a, b) == oracle_dominates(a, b)

    @given(point_sets)
    def test_irreflexive_asymmetric_transitive(self, m):
        rows = m[:8]
        for a in rows:
            assert not dominates(a, a)
            for b in rows:
                if dominates(a, b):
                    assert not dominates(b, a)
                    for c in rows:
                        if dominates(b, c):
                            assert dominates(a, c)


class TestConstrainedDominance:
    def test_feasible_beats_infeasible(self):
        assert constrained_dominates(cp((0, 0), (0,)), cp((9, 9), (0.1,)))

    def test_both_feasible_uses_dominance(self):
        assert constrained_dominates(cp((2, 2), (0,)), cp((1, 2), (0,)))
        assert not constrained_dominates(cp((2, 1), (0,)), cp((1, 2), (0,)))

    def test_both_infeasible_uses_total_violation(self):
        assert constrained_dominates(cp((0, 0), (0.2, 0.1)), cp((9, 9), (0.1, 0.3)))
        assert not constrained_dominates(cp((9, 9), (0.1, 0.3)), cp((0, 0), (0.2, 0.1)))

    def test_violation_range(self):
        with pytest.raises(ValueError):
            cp((0, 0), (1.5,))

    def test_rank_matches_pairwise(self, rng):
        for _ in range(20):
            m = rng.integers(0, 4, size=(15, 2)).astype(float)
            v = np.where(rng.random((15, 2)) < 0.5, 0.0, rng.random((15, 2)))
            pts = [cp(r, vv) for r, vv in zip(m, v)]
            ranks = pareto_rank(m, v)
            for i, p in enumerate(pts):
                dominated = any(constrained_dominates(q, p) for j, q in enumerate(pts) if j != i)
                assert (ranks[i] == 0) == (not dominated)


class TestFilters:
    def test_keeps_duplicates(self):
        m = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
        assert non_dominated_filter(m).tolist() == [[1.0, 2.0], [1.0, 2.0]]

    def test_list_input_returns_list(self):
        pts = [(1, 2), (2, 1), (0, 0)]
        assert non_dominated_filter(pts) == [(1, 2), (2, 1)]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            non_dominated_filter([])

    def test_weak_front_keeps_ties_on_one_axis(self):
        m = np.array([[1.0, 1.0], [1.0, 0.0]])
        assert non_dominated_mask(m).tolist() == [True, False]
        assert weakly_non_dominated_mask(m).tolist() == [True, True]

    @given(point_sets)
    def test_non_dominated_matches_oracle(self, m):
        assert np.flatnonzero(non_dominated_mask(m)).tolist() == oracle_non_dominated(m)

    @given(point_sets)
    def test_weak_matches_oracle(self, m):
        assert np.flatnonzero(weakly_non_dominated_mask(m)).tolist() == oracle_weakly_non_dominated(m)

    @given(point_sets)
    def test_non_dominated_subset_of_weak(self, m):
        assert np.all(weakly_non_dominated_mask(m)[non_dominated_mask(m)])
        assert len(weakly_non_dominated_filter(m)) >= len(non_dominated_filter(m))

    @given(point_sets)
    def test_front_is_mutually_non_dominated_and_idempotent(self, m):
        front = non_dominated_filter(m)
        assert len(front) >= 1
        for a in front:
            for b in front:
                assert not dominates(a, b)
        np.testing.assert_array_equal(non_dominated_filter(front), front)

    @given(point_sets)
    def test_every_removed_point_is_dominated_by_front(self, m):
        mask = non_dominated_mask(m)
        for p in m[~mask]:
            assert any(dominates(q, p) for q in m[mask])


class TestIdeal:
    def test_example(self):
        assert ideal_vector([(1, 5), (3, 2)]).tolist() == [3.0, 5.0]

    @given(point_sets)
    def test_ideal_equals_front_ideal(self, m):
        np.testing.assert_array_equal(ideal_vector(m), ideal_vector(non_dominated_filter(m)))


class TestFrontBudget:
    @pytest.mark.parametrize("k,s,expected", [(2, 5, 5), (5, 5, 625), (5, 7, 2401), (3, 10, 100)])
    def test_values(self, k, s, expected):
        assert front_budget(k, s) == expected

    def test_overflow(self):
        with pytest.raises(OverflowError):
            front_budget(64, 2)
        assert front_budget(63, 2) == 2**62

    def test_custom_limit(self):
        with pytest.raises(OverflowError):
            front_budget(5, 7, limit=2400)

    @pytest.mark.parametrize("k,s", [(1, 5), (3, 1)])
    def test_domain(self, k, s):
        with pytest.raises(ValueError):
            front_budget(k, s)

    def test_default_limit_is_int64(self):
        assert INT64_MAX == np.iinfo(np.int64).max

    @given(st.integers(2, 8), st.integers(2, 20))
    def test_monotone(self, k, s):
        assert front_budget(k + 1, s) > front_budget(k, s)
        assert front_budget(k, s + 1) > front_budget(k, s)


class TestRank:
    def test_chain(self):
        assert pareto_rank([(3, 3), (2, 2), (1, 1)]).tolist() == [0, 1, 2]

    def test_two_fronts(self):
        assert pareto_rank([(1, 3), (3, 1), (1, 1), (2, 2)]).tolist() == [0, 0, 1, 0]

    def test_random_sets_match_oracle(self, rng):
        for _ in range(200):
            m = random_point_set(rng)
            assert pareto_rank(m).tolist() == oracle_ranks(m)

    @given(point_sets)
    def test_rank_zero_is_front_and_ranks_contiguous(self, m):
        r = pareto_rank(m)
        assert np.array_equal(r == 0, non_dominated_mask(m))
        assert set(r.tolist()) == set(range(r.max() + 1))

    @given(point_sets)
    def test_dominator_has_lower_rank(self, m):
        r = pareto_rank(m)
        for i, a in enumerate(m):
            for j, b in enumerate(m):
                if dominates(a, b):
                    assert r[i] < r[j]


class TestEpsilonVerification:
    def test_front_point_passes(self):
        sample = [(1, 3), (3, 1), (1, 1)]
        assert verify_pareto_via_epsilon((1, 3), sample)
        assert not verify_pareto_via_epsilon((1, 1), sample)

    def test_candidate_must_be_in_sample(self):
        with pytest.raises(ValueError):
            verify_pareto_via_epsilon((5, 5), [(1, 3)])

    def test_agrees_with_filter(self, rng):
        for _ in range(100):
            m = random_point_set(rng, integer=bool(rng.integers(0, 2)))
            mask = non_dominated_mask(m)
            for i, p in enumerate(m):
                assert verify_pareto_via_epsilon(p, m) == bool(mask[i]) == oracle_epsilon_pareto(p, m)


class TestParetoRankAssessor:
    specs = (
        ObjectiveSpec("a", Direction.MAXIMIZE, 0, 1),
        ObjectiveSpec("b", Direction.MINIMIZE, 0, 1),
    )

    def test_orientation(self):
        assessor = ParetoRankAssessor(self.specs)
        assert assessor.rank([[0.5, 0.2], [0.5, 0.4]]).tolist() == [0, 1]

    def test_violations_rank_feasible_first(self):
        assessor = ParetoRankAssessor(self.specs, (PenaltySpec.linear(2.0),))
        ranks = assessor.rank([[0.9, 0.1], [0.1, 0.9], [0.5, 0.5]], [[1.0], [0.0], [0.5]])
        assert ranks.tolist() == [2, 0, 1]

    def test_normalized_violation(self):
        assessor = ParetoRankAssessor(self.specs, (PenaltySpec.linear(2.0),))
        assert assessor.normalized_violations([1.0]).tolist() == [0.5]
        with pytest.raises(ValueError):
            assessor.normalized_violations([])


class TestCsv:
    def test_roundtrip_is_exact(self, tmp_path, rng):
        raw = rng.random((7, 3)) * 1e3
        path = tmp_path / "front.csv"
        write_front_csv(path, raw, pareto_rank(raw), ["x", "y", "z"])
        text = path.read_bytes()
        assert b"\r" not in text
        assert text.splitlines()[0] == b"x,y,z,rank"
        names, back = read_points_csv(path)
        assert names == ["x", "y", "z"]
        np.testing.assert_array_equal(back, raw)

    def test_missing_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("a,b\n")
        with pytest.raises(ValueError):
            read_points_csv(path)

    @settings(max_examples=50)
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_float_format_roundtrips(self, x):
        assert float(format_float(x)) == x
