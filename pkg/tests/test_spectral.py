import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairspec.kernels import GramMatrix, PairSample, build_gram
from pairspec.spectral import (
    CheckResult,
    EigenSolverError,
    ProjectionPair,
    check_commuting_family,
    check_eigen_dominance,
    check_majorization,
    effdim_curve,
    effective_dimension,
    eigh_psd,
    empirical_operator,
    kraus_channel,
    permutation_matrix,
    project_gram,
)

from conftest import random_problem

G2 = np.array([[2.0, 1.0], [1.0, 2.0]])
SWAP2 = ProjectionPair([1, 0])


def random_psd(rng, n, rank=None):
    X = rng.normal(size=(n, rank or n))
    M = X @ X.T
    return np.triu(M) + np.triu(M, 1).T


class TestEigh:
    def test_identity(self):
        np.testing.assert_array_equal(eigh_psd(np.eye(3)).values, [1.0, 1.0, 1.0])

    def test_two_by_two(self):
        sp = eigh_psd(G2)
        np.testing.assert_allclose(sp.values, [3.0, 1.0], atol=1e-14)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(np.abs(sp.vectors), [[s, s], [s, s]], atol=1e-14)
        assert np.sign(sp.vectors[0, 0]) == np.sign(sp.vectors[1, 0])
        assert np.sign(sp.vectors[0, 1]) != np.sign(sp.vectors[1, 1])

    def test_rank_one(self):
        np.testing.assert_allclose(eigh_psd(np.ones((2, 2))).values, [2.0, 0.0], atol=1e-15)

    def test_accepts_gram_and_empty(self):
        sp = eigh_psd(GramMatrix(G2))
        assert sp.trace == 4.0
        assert len(eigh_psd(np.zeros((0, 0)))) == 0

    def test_invariants_random(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 5, 17, 40):
            M = random_psd(rng, n, rank=max(1, n // 2))
            sp = eigh_psd(M)
            assert np.all(np.diff(sp.values) <= 0)
            assert np.all(sp.values >= 0)
            np.testing.assert_allclose(sp.vectors.T @ sp.vectors, np.eye(n), atol=1e-8)
            assert np.max(np.abs(M @ sp.vectors - sp.vectors * sp.values)) <= 1e-8 * np.trace(M)
            assert sp.values.sum() == pytest.approx(np.trace(M), rel=1e-8)
            np.testing.assert_allclose(sp.values, np.linalg.eigvalsh(M)[::-1],
                                       atol=1e-10 * np.trace(M))

    def test_deterministic(self):
        M = random_psd(np.random.default_rng(3), 12)
        a, b = eigh_psd(M), eigh_psd(M)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.vectors, b.vectors)

    def test_rejects(self):
        with pytest.raises(ValueError, match="symmetric"):
            eigh_psd(np.array([[1.0, 0.1], [0.0, 1.0]]))
        with pytest.raises(ValueError, match="PSD"):
            eigh_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(ValueError):
            eigh_psd(np.ones((2, 3)))

    def test_sweep_cap(self, monkeypatch):
        from pairspec import _accel

        def capped(G, rel_tol=1e-15, max_sweeps=100):
            return _accel.jacobi_numpy(G, _accel.round_robin_schedule(G.shape[0]), rel_tol, 0)

        monkeypatch.setattr(_accel, "jacobi", capped)
        with pytest.raises(EigenSolverError, match="residual"):
            eigh_psd(G2)


class TestEmpiricalOperator:
    def test_scaling(self):
        np.testing.assert_array_equal(empirical_operator(np.eye(4)).values, [0.25] * 4)
        np.testing.assert_allclose(empirical_operator(G2).values, [1.5, 0.5], atol=1e-15)

    def test_trace(self):
        M = random_psd(np.random.default_rng(1), 9)
        assert empirical_operator(M).trace == pytest.approx(np.trace(M) / 9, rel=1e-15)


class TestProjections:
    def test_permutation_matrix(self):
        np.testing.assert_array_equal(
            permutation_matrix(PairSample([(0, 1), (1, 0), (2, 2)])).perm, [1, 0, 2])
        np.testing.assert_array_equal(
            permutation_matrix(PairSample([(0, 0), (1, 1)])).perm, [0, 1])

    def test_not_closed(self):
        with pytest.raises(ValueError, match=r"missing swaps: \(1, 0\)"):
            permutation_matrix(PairSample([(0, 1)]))

    def test_projection_algebra(self):
        _, _, _, sample = random_problem(4)
        proj = permutation_matrix(sample)
        np.testing.assert_array_equal(proj.perm[proj.perm], np.arange(proj.n))
        S, A, I = proj.S, proj.A, np.eye(proj.n)
        np.testing.assert_allclose(S @ S, S, atol=1e-12)
        np.testing.assert_allclose(A @ A, A, atol=1e-12)
        np.testing.assert_allclose(S @ A, 0, atol=1e-12)
        np.testing.assert_array_equal(S + A, I)

    def test_bad_perm(self):
        with pytest.raises(ValueError):
            ProjectionPair([1, 2, 0])

    def test_two_by_two(self):
        GS = project_gram(G2, SWAP2, "S")
        GA = project_gram(G2, SWAP2, "A")
        np.testing.assert_allclose(GS, [[1.5, 1.5], [1.5, 1.5]], atol=1e-15)
        np.testing.assert_allclose(GA, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)
        np.testing.assert_allclose(GS + GA, G2, atol=1e-15)
        np.testing.assert_array_equal(project_gram(G2, SWAP2, "PI"), G2)

    def test_errors(self):
        with pytest.raises(ValueError, match="size"):
            project_gram(np.eye(3), SWAP2, "S")
        with pytest.raises(ValueError, match="mode"):
            project_gram(G2, SWAP2, "X")

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_transformed_gram(self, seed):
        _, spec, points, sample = random_problem(seed)
        proj = permutation_matrix(sample)
        G = build_gram(spec, points, sample)
        for mode, t in (("S", "symmetric"), ("A", "antisymmetric"),
                        ("PI", "permutation_invariant")):
            direct = build_gram(spec.with_transform(t), points, sample).values
            np.testing.assert_allclose(project_gram(G, proj, mode), direct, rtol=0, atol=1e-10)
        np.testing.assert_allclose(project_gram(G, proj, "PI"),
                                   project_gram(G, proj, "S") + project_gram(G, proj, "A"),
                                   atol=1e-10)


class TestEffectiveDimension:
    def test_worked(self):
        assert effective_dimension([1.0, 0.5, 0.25], 0.5) == pytest.approx(1.5, rel=1e-15)
        assert effective_dimension([1.0, 1.0, 1.0], 1e-12) == pytest.approx(3.0, rel=1e-11)
        assert effective_dimension([2.0, 1.0], 1e9) <= 3.0 / 1e9

    def test_curve(self):
        curve = effdim_curve([1.0], [0.5, 1.0, 2.0])
        np.testing.assert_allclose([c[1] for c in curve], [2 / 3, 0.5, 1 / 3], rtol=1e-15)
        assert all(c[1] == 0 for c in effdim_curve([0.0, 0.0], [0.1, 1.0]))

    def test_errors(self):
        with pytest.raises(ValueError):
            effective_dimension([1.0], 0.0)
        with pytest.raises(ValueError):
            effective_dimension([-1.0], 1.0)
        with pytest.raises(ValueError):
            effdim_curve([1.0], [])
        with pytest.raises(ValueError):
            effdim_curve([1.0], [1.0, 0.5])


@settings(max_examples=100, deadline=None)
@given(vals=st.lists(st.floats(0.0, 100.0), min_size=1, max_size=30),
       grid=st.lists(st.floats(1e-6, 1e3), min_size=2, max_size=8, unique=True))
def test_effdim_curve_monotone(vals, grid):
    curve = effdim_curve(vals, sorted(grid))
    ys = [y for _, y in curve]
    assert all(b <= a + 1e-12 for a, b in zip(ys, ys[1:]))
    assert ys[0] <= sum(v > 0 for v in vals) + 1e-12


class TestChecks:
    def test_check_result_invariant(self):
        assert CheckResult.from_margin("x", -1e-9, 1e-9).passed
        assert not CheckResult.from_margin("x", -2e-9, 1e-9).passed
        js = CheckResult.from_margin("x", 0.5, 1e-3, n=4).to_json()
        assert set(js) == {"name", "passed", "margin", "tolerance", "context"}

    def test_eigen_dominance(self):
        c = check_eigen_dominance([3.0, 1.0], [3.0, 0.0], 1e-9)
        assert c.passed and c.margin == 0.0
        assert check_eigen_dominance([2.0, 1.0], [2.0, 1.0], 0.0).margin == 0.0
        assert not check_eigen_dominance([2.0, 2.0], [3.0, 0.0], 1e-9).passed
        assert check_eigen_dominance([2.0, 1.0, 0.5], [1.0], 0.0).passed

    def test_majorization(self):
        rep = check_majorization([2.0, 2.0], [3.0, 1.0], 1e-12)
        assert rep.majorized
        np.testing.assert_array_equal(rep.partial_sum_margins, [1.0, 0.0])
        rep = check_majorization([1.0, 2.0], [1.0, 2.0], 0.0)
        assert rep.majorized and rep.trace_gap == 0.0
        rep = check_majorization([3.0, 1.0], [2.0, 2.0], 1e-12)
        assert not rep.majorized and rep.partial_sum_margins[0] == -1.0
        assert not rep.to_check().passed
        with pytest.raises(ValueError):
            check_majorization([-1.0], [1.0], 1e-12)

    def test_commuting_two_by_two(self):
        c = check_commuting_family(G2, SWAP2)
        assert c.passed
        assert eigh_psd(project_gram(G2, SWAP2, "S")).values[0] == pytest.approx(3.0)
        assert eigh_psd(project_gram(G2, SWAP2, "A")).values[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_commuting_random(self, seed):
        rng = np.random.default_rng(seed)
        # 10 x 10: 3 swapped couples plus 4 diagonal pairs
        pairs = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1), (0, 0), (1, 1), (2, 2), (3, 3)]
        proj = permutation_matrix(PairSample(pairs))
        c = check_commuting_family(random_psd(rng, 10), proj, 1e-8, 1e-8)
        assert c.passed

    def test_commuting_reports_gaps(self):
        M = random_psd(np.random.default_rng(2), 4)
        c = check_commuting_family(M, ProjectionPair([1, 0, 3, 2]))
        assert c.context["matrix_gap"] <= 1e-12 * np.trace(M)
        assert c.context["spectral_gap"] <= 1e-12 * np.trace(M)
        assert c.margin <= 0.0

    def test_kraus(self):
        GG, c = kraus_channel(np.eye(2), SWAP2)
        np.testing.assert_array_equal(GG, np.eye(2))
        assert c.passed and c.context["unital"]
        GG, c = kraus_channel(G2, SWAP2)
        np.testing.assert_allclose(GG, G2, atol=1e-15)
        assert c.passed and c.context["trace_gap"] == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_kraus_random_majorized(self, seed):
        _, spec, points, sample = random_problem(seed)
        proj = permutation_matrix(sample)
        G = build_gram(spec, points, sample)
        GG, c = kraus_channel(G, proj)
        assert c.passed
        np.testing.assert_allclose(GG, project_gram(G, proj, "PI"), atol=1e-12)
        rep = check_majorization(eigh_psd(GG).values, eigh_psd(G).values, 1e-8 * G.trace)
        assert rep.majorized
