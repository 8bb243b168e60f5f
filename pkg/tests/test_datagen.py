import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairspec.datagen import (
    SmoothTarget,
    decay_seeds,
    gen_points,
    gen_target,
    grid_points,
    sample_pairs,
)
from pairspec.kernels import all_pairs
from pairspec.spectral import permutation_matrix


class TestGenPoints:
    def test_single(self):
        p = gen_points(1, 1, 5)
        assert p.points.shape == (1, 1) and 0.0 <= p.points[0, 0] <= 1.0

    def test_deterministic(self):
        np.testing.assert_array_equal(gen_points(7, 3, 9).points, gen_points(7, 3, 9).points)
        assert not np.array_equal(gen_points(7, 3, 9).points, gen_points(7, 3, 10).points)

    def test_pcg64_stream(self):
        expected = np.random.Generator(np.random.PCG64(123)).uniform(size=(4, 2))
        np.testing.assert_array_equal(gen_points(4, 2, 123).points, expected)

    @pytest.mark.parametrize("n,d", [(0, 1), (1, 0)])
    def test_errors(self, n, d):
        with pytest.raises(ValueError):
            gen_points(n, d, 0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**63), n=st.integers(1, 100), d=st.integers(1, 4))
def test_points_in_unit_cube(seed, n, d):
    p = gen_points(n, d, seed).points
    assert p.shape == (n, d)
    assert np.all((p >= 0.0) & (p <= 1.0))


class TestSamplePairs:
    def test_exhaustive(self):
        np.testing.assert_array_equal(sample_pairs(5, 0).pairs, all_pairs(5).pairs)

    def test_subset_closed(self):
        s = sample_pairs(20, 3, max_pairs=40)
        assert s.swap_closed and len(s) <= 40
        assert len(s) == len(set(map(tuple, s.pairs.tolist())))


class TestTargets:
    @pytest.mark.parametrize("kind", ["symmetric", "antisymmetric", "ranking"])
    def test_exact_symmetry(self, kind):
        points = gen_points(6, 2, 1)
        sample = all_pairs(6)
        t = gen_target(kind, points, sample, 4)
        perm = permutation_matrix(sample).perm
        sign = 1.0 if kind == "symmetric" else -1.0
        np.testing.assert_array_equal(t.values[perm], sign * t.values)
        assert t.symmetry == ("symmetric" if kind == "symmetric" else "antisymmetric")

    def test_ranking_diagonal_zero(self):
        points = gen_points(4, 3, 2)
        t = gen_target("ranking", points, all_pairs(4), 0)
        np.testing.assert_array_equal(t.values[[0, 5, 10, 15]], 0.0)

    def test_symmetric_structure(self):
        f = SmoothTarget("symmetric", 1, 3)
        V, W = np.array([[0.2]]), np.array([[0.6]])
        g, h = f._g, f._h
        assert f(V, W)[0] == g(V)[0] * g(W)[0] + (h(V)[0] + h(W)[0])

    def test_generic_not_symmetric(self):
        points = gen_points(5, 1, 0)
        t = gen_target("generic", points, all_pairs(5), 0)
        perm = permutation_matrix(all_pairs(5)).perm
        assert np.max(np.abs(t.values - t.values[perm])) > 1e-3
        assert t.symmetry == "generic"

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            SmoothTarget("odd", 1, 0)


def test_grid_points_cap():
    for d in (1, 2, 3):
        g = grid_points(d)
        assert len(g) ** 2 <= 225
    assert len(grid_points(1)) == 15
    assert len(grid_points(2)) == 9


def test_decay_seeds_deterministic():
    assert decay_seeds(42) == decay_seeds(42)
    assert len(set(decay_seeds(42))) == 3
