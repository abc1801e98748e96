import math

import numpy as np
import pytest

from clthres import PairwiseDist, SampleMatrix, all_empirical_mi, empirical_pairwise, mutual_information
from clthres.estimation import (
    SampleFormatError,
    empirical_mi,
    node_types,
    read_samples_csv,
    write_samples_csv,
)
from clthres.synthgen import SeededRng


def test_sample_matrix_validation():
    with pytest.raises(ValueError):
        SampleMatrix(np.array([[0, 2]]), 2)
    with pytest.raises(ValueError):
        SampleMatrix(np.array([[0], [1]]), 2)
    s = SampleMatrix([[0, 1], [1, 1]], 2)
    assert (s.n, s.d, s.r) == (2, 2, 2)
    with pytest.raises(ValueError):
        s.data[0, 0] = 1


def test_direct_count():
    s = SampleMatrix([[0, 0], [0, 1], [1, 1], [1, 1]], 2)
    t = empirical_pairwise(s, 0, 1).type_table.table
    np.testing.assert_array_equal(t, [[0.25, 0.25], [0.0, 0.5]])


def test_constant_columns_point_mass():
    s = SampleMatrix(np.tile([2, 1, 0], (7, 1)), 3)
    t = empirical_pairwise(s, 0, 1).type_table.table
    expected = np.zeros((3, 3))
    expected[2, 1] = 1.0
    np.testing.assert_array_equal(t, expected)


def test_entries_are_multiples_of_one_over_n(rng):
    s = SampleMatrix(rng.integers(0, 3, size=(37, 4)), 3)
    t = empirical_pairwise(s, 1, 3).type_table.table * 37
    np.testing.assert_allclose(t, np.round(t), atol=1e-12)


def test_converges_to_truth():
    truth = np.array([[0.1, 0.2], [0.3, 0.4]])
    gen = SeededRng(11).generator()
    cells = gen.choice(4, size=10_000, p=truth.ravel())
    s = SampleMatrix(np.column_stack([cells // 2, cells % 2]), 2)
    t = empirical_pairwise(s, 0, 1).type_table.table
    assert np.max(np.abs(t - truth)) < 0.05


def test_node_types_shared_across_pairs(rng):
    s = SampleMatrix(rng.integers(0, 3, size=(50, 5)), 3)
    nt = node_types(s)
    for i in range(5):
        for k in range(5):
            if k != i:
                pd = empirical_pairwise(s, i, k).type_table
                # row sums of c/n agree with (sum c)/n up to rounding
                np.testing.assert_allclose(pd.table.sum(axis=1), nt[i], atol=1e-15)


def test_mi_matrix_matches_pairwise(rng):
    s = SampleMatrix(rng.integers(0, 3, size=(200, 6)), 3)
    mi = all_empirical_mi(s)
    assert np.array_equal(mi, mi.T)
    for i in range(6):
        for j in range(i + 1, 6):
            assert mi[i, j] == pytest.approx(empirical_mi(s, i, j), abs=1e-12)


def test_perfect_correlation():
    col = np.array([0, 1, 1, 0, 1, 0, 0, 1])
    mi = all_empirical_mi(SampleMatrix(np.column_stack([col, col]), 2))
    assert mi[0, 1] == pytest.approx(math.log(2), abs=1e-15)


def test_independent_columns_small_mi():
    gen = SeededRng(5).generator()
    s = SampleMatrix(gen.integers(0, 2, size=(10_000, 2)), 2)
    assert all_empirical_mi(s)[0, 1] <= 0.02


def test_permutation_equivariance(rng):
    s = SampleMatrix(rng.integers(0, 2, size=(300, 3)), 2)
    perm = [2, 0, 1]
    mi = all_empirical_mi(s)
    mi_p = all_empirical_mi(SampleMatrix(s.data[:, perm], 2))
    np.testing.assert_allclose(mi_p, mi[np.ix_(perm, perm)], atol=1e-15)


def test_mi_concentration_rate():
    ns = [250, 500, 1000, 2000]
    stds = []
    for n in ns:
        vals = []
        for seed in range(200):
            x = SeededRng(seed, n).generator().integers(0, 2, size=(n, 2))
            vals.append(mutual_information(empirical_pairwise(SampleMatrix(x, 2), 0, 1).type_table))
        stds.append(np.std(vals))
    slope = np.polyfit(np.log(ns), np.log(stds), 1)[0]
    assert -1.35 <= slope <= -0.65


class TestCsv:
    def test_round_trip(self, tmp_path, rng):
        s = SampleMatrix(rng.integers(0, 3, size=(20, 4)), 3)
        for header in (False, True):
            path = tmp_path / f"s{header}.csv"
            write_samples_csv(s, path, header=header)
            back = read_samples_csv(path, header=header, r=3)
            np.testing.assert_array_equal(back.data, s.data)

    def test_infers_alphabet(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("0,1\n0,0\n")
        assert read_samples_csv(path).r == 2

    def test_bad_symbol_has_line_number(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("0,1\n0,x\n")
        with pytest.raises(SampleFormatError, match=":2:"):
            read_samples_csv(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("a,b\n0,1\n0,1,1\n")
        with pytest.raises(SampleFormatError, match=":3:"):
            read_samples_csv(path, header=True)

    def test_out_of_alphabet(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("0,1\n0,2\n")
        with pytest.raises(SampleFormatError, match=":2:"):
            read_samples_csv(path, r=2)
