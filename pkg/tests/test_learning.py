import itertools
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clthres import (
    ForestModel,
    NodeDist,
    PairwiseDist,
    RegSchedule,
    SampleMatrix,
    SeededRng,
    StarForestSpec,
    build_star_forest,
    chow_liu,
    clthres,
    kruskal_mwst,
    sample,
)
from clthres.core import is_forest, joint_kl, project_onto_structure
from clthres.estimation import node_types
from clthres.learning import learn_path, threshold_estimate
from clthres.oracles import best_spanning_tree_weight, prufer_trees

from conftest import random_forest, random_model_on


class TestKruskal:
    def test_unique_maximum(self):
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = 0.5
        w[0, 2] = w[2, 0] = 0.4
        w[1, 2] = w[2, 1] = 0.1
        r = kruskal_mwst(w)
        assert r.edges == ((0, 1), (0, 2))
        assert r.scores == (0.5, 0.4)

    def test_ties_give_star_at_zero(self):
        r = kruskal_mwst(np.ones((6, 6)))
        assert r.edges == tuple((0, j) for j in range(1, 6))

    def test_rejects_small_or_nonfinite(self):
        with pytest.raises(ValueError):
            kruskal_mwst(np.zeros((1, 1)))
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = np.inf
        with pytest.raises(ValueError):
            kruskal_mwst(w)

    def test_prufer_enumeration_is_cayley(self):
        trees = set(prufer_trees(7))
        assert len(trees) == 7**5
        assert all(is_forest(7, t) and len(t) == 6 for t in trees)

    def test_matches_exhaustive_at_d7(self, rng):
        for _ in range(5):
            w = rng.random((7, 7))
            w = (w + w.T) / 2
            r = kruskal_mwst(w)
            assert r.total_weight == pytest.approx(best_spanning_tree_weight(w), abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 12).flatmap(lambda d: st.tuples(
        st.just(d), st.lists(st.floats(0, 1), min_size=d * d, max_size=d * d))))
    def test_output_contract(self, case):
        d, vals = case
        w = np.reshape(vals, (d, d))
        w = (w + w.T) / 2
        r = kruskal_mwst(w)
        assert len(r) == d - 1 and is_forest(d, r.edges)
        assert all(a >= b for a, b in zip(r.scores, r.scores[1:]))


class TestThreshold:
    def test_direct_cut(self):
        assert threshold_estimate([0.5, 0.3, 0.001, 0.0005], 0.01) == 2

    def test_all_above_or_below(self):
        assert threshold_estimate([0.5, 0.4, 0.3], 0.01) == 3
        assert threshold_estimate([0.005, 0.004], 0.01) == 0

    def test_ties_excluded(self):
        assert threshold_estimate([0.5, 0.25, 0.25, 0.125], 0.25) == 1

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=20),
           st.floats(1e-6, 1), st.floats(1e-6, 1))
    def test_monotone_in_eps(self, scores, e1, e2):
        scores = sorted(scores, reverse=True)
        lo, hi = min(e1, e2), max(e1, e2)
        assert threshold_estimate(scores, hi) <= threshold_estimate(scores, lo)


class TestSchedule:
    def test_power(self):
        assert RegSchedule.power(0.5)(10_000) == pytest.approx(0.01)
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                RegSchedule.power(bad)

    def test_power_satisfies_regularisation_conditions(self):
        s = RegSchedule.power(0.7)
        ns = np.array([1e3, 1e5, 1e7, 1e9])
        eps = np.array([s(n) for n in ns])
        assert np.all(np.diff(eps) < 0)
        assert np.all(np.diff(ns * eps / np.log(ns)) > 0)

    def test_oracle_and_explicit(self):
        assert RegSchedule.oracle(0.04)(123) == 0.04
        with pytest.raises(ValueError):
            RegSchedule.oracle(0.0)
        s = RegSchedule.explicit({100: 0.1})
        assert s(100) == 0.1
        with pytest.raises(ValueError):
            s(200)
        assert RegSchedule.explicit(lambda n: 1 / n)(50) == 0.02


def star(d, k, c=0.3):
    return build_star_forest(StarForestSpec(d, k, c))


class TestCLThres:
    def test_model_invariants(self):
        truth = star(8, 4)
        s = sample(truth, 500, SeededRng(3))
        learned = clthres(s, RegSchedule.power(0.5))
        m = learned.model
        assert m.edges == tuple(sorted(learned.edge_set))
        nt = node_types(s)
        for i in range(8):
            np.testing.assert_array_equal(m.node_marginals[i].probs, nt[i])
        for i, j in m.edges:
            counts = np.zeros((2, 2))
            np.add.at(counts, (s.data[:, i], s.data[:, j]), 1)
            np.testing.assert_array_equal(m.edge_table(i, j), counts / s.n)

    def test_empty_forest_gives_no_edges(self):
        truth = star(5, 0)
        hits = sum(
            clthres(sample(truth, 2000, SeededRng(t, 1)), RegSchedule.power(0.5)).k_hat == 0
            for t in range(100)
        )
        assert hits >= 90

    def test_star_recovery(self):
        truth = star(5, 4)
        hits = sum(
            set(clthres(sample(truth, 5000, SeededRng(t, 2)), RegSchedule.power(0.5)).edge_set)
            == set(truth.edges)
            for t in range(100)
        )
        assert hits >= 90

    def test_oracle_beats_weak_power_schedule(self):
        truth = star(5, 2)
        i_min = min(truth.edge_mi().values())
        wins = {"oracle": 0, "power": 0}
        for t in range(100):
            s = sample(truth, 5000, SeededRng(t, 3))
            for name, sched in (("oracle", RegSchedule.oracle(i_min / 2)),
                                ("power", RegSchedule.power(0.9))):
                wins[name] += set(clthres(s, sched).edge_set) == set(truth.edges)
        assert wins["oracle"] > wins["power"]

    def test_pruning_nesting(self, rng):
        truth = random_forest(rng, 10, 5)
        s = sample(truth, 300, SeededRng(4))
        betas = [0.1, 0.3, 0.5, 0.7, 0.9]
        path = learn_path(s, betas)
        for b1, b2 in zip(betas, betas[1:]):
            assert set(path[b1].edge_set) <= set(path[b2].edge_set)
            assert path[b1].edge_set == clthres(s, RegSchedule.power(b1)).edge_set

    def test_reverse_projection_optimality(self, rng):
        d = 6
        truth = random_forest(rng, d, 4)
        s = sample(truth, 400, SeededRng(5))
        joint = np.zeros((2,) * d)
        np.add.at(joint, tuple(s.data.T), 1.0)
        joint /= s.n
        learned = clthres(s, RegSchedule.power(0.3))
        t = learned.edge_set
        p_star = learned.model
        # closed form equals the generic projection of the joint type
        proj = project_onto_structure(joint, t)
        for e in t:
            np.testing.assert_allclose(proj.edge_table(*e), p_star.edge_table(*e), atol=1e-12)
        base = joint_kl(joint, p_star)
        for _ in range(200):
            q = random_model_on(rng, d, list(t))
            assert base <= joint_kl(joint, q) + 1e-12


class TestChowLiu:
    def test_two_nodes(self, rng):
        s = SampleMatrix(rng.integers(0, 2, size=(30, 2)), 2)
        assert chow_liu(s).edges == ((0, 1),)

    def test_equivalent_to_unpruned_clthres(self, rng):
        truth = random_forest(rng, 7, 3)
        s = sample(truth, 400, SeededRng(6))
        assert chow_liu(s) == clthres(s, RegSchedule.power(0.5)).ranking

    def test_recovers_tree(self, rng):
        edges = [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (2, 6), (6, 7)]
        u = NodeDist([0.5, 0.5])
        truth = ForestModel(8, 2, tuple(edges), (u,) * 8,
                            {e: PairwiseDist.binary_symmetric(0.3) for e in edges})
        hits = sum(
            set(chow_liu(sample(truth, 5000, SeededRng(t, 7))).edges) == set(truth.edges)
            for t in range(40)
        )
        assert hits >= 0.95 * 40

    def test_deterministic(self, rng):
        s = SampleMatrix(rng.integers(0, 2, size=(100, 9)), 2)
        assert chow_liu(s) == chow_liu(s)


@pytest.mark.slow
def test_runtime_quadratic_in_d():
    n = 2000
    ds = [20, 40, 80, 160]
    times = []
    for d in ds:
        x = SeededRng(8, d).generator().integers(0, 2, size=(n, d))
        s = SampleMatrix(x, 2)
        reps = []
        for _ in range(5):
            t0 = time.perf_counter()
            clthres(s, RegSchedule.power(0.5))
            reps.append(time.perf_counter() - t0)
        times.append(np.median(reps))
    slope = np.polyfit(np.log(ds), np.log(times), 1)[0]
    assert 1.6 <= slope <= 2.4, (slope, times)
