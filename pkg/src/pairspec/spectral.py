"""Eigendecomposition, swap projections, effective dimension and spectral checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from pairspec import _accel
from pairspec.kernels import GramMatrix, PairSample, PSD_REL_TOL

RESIDUAL_REL_TOL = 1e-8


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Spectrum:
    """Descending eigenvalues with aligned orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray
    trace: float

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ProjectionPair:
    """Swap involution over a swap-closed sample and the projections it induces."""

    perm: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        n = perm.shape[0]
        if n and (perm.min() < 0 or perm.max() >= n or not np.array_equal(perm[perm], np.arange(n))):
            raise ValueError("perm must be an involution on range(n)")
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)

    @property
    def n(self) -> int:
        return self.perm.shape[0]

    @property
    def P(self) -> np.ndarray:
        P = np.zeros((self.n, self.n))
        P[np.arange(self.n), self.perm] = 1.0
        return P

    @property
    def S(self) -> np.ndarray:
        return 0.5 * (np.eye(self.n) + self.P)

    @property
    def A(self) -> np.ndarray:
        return 0.5 * (np.eye(self.n) - self.P)


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    tolerance: float
    context: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_margin(cls, name: str, margin: float, tolerance: float, **context) -> "CheckResult":
        margin = float(margin)
        return cls(name, bool(margin >= -tolerance), margin, float(tolerance), context)

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "context": self.context,
        }


@dataclass
class MajorizationReport:
    partial_sum_margins: np.ndarray
    trace_gap: float
    majorized: bool
    tolerance: float

    def to_check(self, name: str = "majorization", **context) -> CheckResult:
        margins = np.append(self.partial_sum_margins, -abs(self.trace_gap))
        return CheckResult.from_margin(name, float(np.min(margins)), self.tolerance, **context)


def _ref_trace(G) -> float:
    return G.ref_trace if isinstance(G, GramMatrix) else 0.0


def _matrix(G) -> np.ndarray:
    return np.asarray(G.values if isinstance(G, GramMatrix) else G, dtype=np.float64)


def eigh_psd(G, ref_trace: float | None = None) -> Spectrum:
    """Jacobi eigendecomposition of a symmetric PSD matrix.

    Eigenvalues are sorted descending (stable on ties) and those in
    ``[-1e-10 * trace, 0)`` are clipped to zero. Raises EigenSolverError if
    the sweep cap is hit or the residual exceeds ``1e-8 * trace``. The
    trace used for tolerances is at least ``ref_trace`` (by default the
    GramMatrix reference trace).
    """
    M = _matrix(G)
    ref = _ref_trace(G) if ref_trace is None else float(ref_trace)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.array_equal(M, M.T):
        raise ValueError("matrix is not exactly symmetric")
    n = M.shape[0]
    tr = float(np.trace(M))
    if n == 0:
        return Spectrum(np.zeros(0), np.zeros((0, 0)), 0.0)
    vals, vecs, sweeps, converged = _accel.jacobi(M)
    scale = max(abs(tr), ref, float(np.max(np.abs(M))), np.finfo(float).tiny)
    residual = float(np.max(np.abs(M @ vecs - vecs * vals)))
    if not converged:
        raise EigenSolverError(
            f"Jacobi did not converge in {sweeps} sweeps (residual {residual:.3e})"
        )
    if residual > RESIDUAL_REL_TOL * scale:
        raise EigenSolverError(f"eigen residual {residual:.3e} exceeds {RESIDUAL_REL_TOL:g} * trace")
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    floor = -PSD_REL_TOL * max(tr, ref, 0.0)
    if vals[-1] < floor:
        raise ValueError(f"matrix is not PSD: eigenvalue {vals[-1]:.3e} below {floor:.3e}")
    vals = np.where(vals < 0.0, 0.0, vals)
    return Spectrum(vals, vecs, tr)


def empirical_operator(G) -> Spectrum:
    """Spectrum of T = G / n, the empirical integral operator."""
    M = _matrix(G)
    n = M.shape[0]
    return eigh_psd(M / n, _ref_trace(G) / n if n else 0.0)


def permutation_matrix(sample: PairSample) -> ProjectionPair:
    """Swap involution: pair (i, j) maps to the position of (j, i)."""
    if not sample.swap_closed:
        missing = sample.missing_swaps()
        shown = ", ".join(map(str, missing[:10]))
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise ValueError(f"sample is not swap-closed; missing swaps: {shown}{more}")
    index = {pair: a for a, pair in enumerate(map(tuple, sample.pairs.tolist()))}
    perm = np.array([index[(j, i)] for i, j in sample.pairs.tolist()], dtype=np.int64)
    return ProjectionPair(perm)


def _symmetrize(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.T)


def project_gram(G, proj: ProjectionPair, mode: str) -> np.ndarray:
    """S G S, A G A or (G + P G P) / 2 as an exactly symmetric matrix."""
    M = _matrix(G)
    if M.shape != (proj.n, proj.n):
        raise ValueError(f"size mismatch: Gram {M.shape} vs projection of size {proj.n}")
    if mode == "S":
        S = proj.S
        return _symmetrize(S @ M @ S)
    if mode == "A":
        A = proj.A
        return _symmetrize(A @ M @ A)
    if mode == "PI":
        P = proj.P
        return _symmetrize(0.5 * (M + P @ M @ P))
    raise ValueError(f"unknown projection mode {mode!r}; expected S, A or PI")


def effective_dimension(values: Sequence[float], reg: float) -> float:
    """Sum of lam / (lam + reg) over the given eigenvalues."""
    if not reg > 0:
        raise ValueError(f"regularization must be > 0, got {reg}")
    lam = np.asarray(values, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("eigenvalues must be non-negative")
    return float(np.sum(lam / (lam + reg)))


def effdim_curve(values: Sequence[float], grid: Sequence[float]) -> list[tuple[float, float]]:
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty regularization grid")
    if any(g <= 0 for g in grid):
        raise ValueError("grid values must be > 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly ascending")
    return [(g, effective_dimension(values, g)) for g in grid]


def _values(x) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, Spectrum) else x, dtype=np.float64)


def _pad(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = max(a.shape[0], b.shape[0])
    return np.pad(a, (0, n - a.shape[0])), np.pad(b, (0, n - b.shape[0]))


def check_eigen_dominance(full, projected, tol: float, name: str = "eigen_dominance",
                          **context) -> CheckResult:
    """Elementwise descending-order dominance of ``projected`` by ``full``."""
    f, p = _pad(np.sort(_values(full))[::-1], np.sort(_values(projected))[::-1])
    margin = float(np.min(f - p)) if f.size else 0.0
    return CheckResult.from_margin(name, margin, tol, **context)


def check_majorization(r, s, tol: float) -> MajorizationReport:
    """Whether ``s`` majorizes ``r`` (prefix sums of r bounded by those of s, equal totals)."""
    r = _values(r)
    s = _values(s)
    if np.any(r < -tol) or np.any(s < -tol):
        raise ValueError("majorization is defined for non-negative sequences")
    r, s = _pad(np.sort(r)[::-1], np.sort(s)[::-1])
    margins = np.cumsum(s) - np.cumsum(r)
    gap = float(np.sum(r) - np.sum(s))
    ok = bool(np.all(margins >= -tol) and abs(gap) <= tol)
    return MajorizationReport(margins, gap, ok, float(tol))


def check_commuting_family(G, proj: ProjectionPair, tol: float = 1e-10,
                           spectral_tol: float = 1e-8,
                           name: str = "commuting_family", **context) -> CheckResult:
    """S A = 0, G^S G^A = G^A G^S = 0 and G^PI = G^S + G^A within ``tol``; the
    PI spectrum is the union of the S and A spectra within ``spectral_tol * trace(G)``.

    The spectral part compares multisets: the n largest of eig(G^S) and
    eig(G^A) combined must match eig(G^PI), and the remaining n must vanish.
    The reported margin is on the scale of ``tol``.
    """
    M = _matrix(G)
    n = M.shape[0]
    S, A = proj.S, proj.A
    GS = project_gram(M, proj, "S")
    GA = project_gram(M, proj, "A")
    GPI = project_gram(M, proj, "PI")
    matrix_gap = max(
        np.max(np.abs(S @ A)),
        np.max(np.abs(GS @ GA)),
        np.max(np.abs(GA @ GS)),
        np.max(np.abs(GPI - (GS + GA))),
    )
    ref = max(float(np.trace(M)), _ref_trace(G))
    pi_vals = eigh_psd(GPI, ref).values
    union = np.sort(np.concatenate([eigh_psd(GS, ref).values, eigh_psd(GA, ref).values]))[::-1]
    spectral_gap = max(np.max(np.abs(union[:n] - pi_vals)), np.max(np.abs(union[n:])))
    spectral_abs = spectral_tol * max(float(np.trace(M)), np.finfo(float).tiny)
    margin = -max(float(matrix_gap), float(spectral_gap) * tol / spectral_abs)
    return CheckResult.from_margin(name, margin, tol, matrix_gap=float(matrix_gap),
                                   spectral_gap=float(spectral_gap), **context)


def kraus_channel(G, proj: ProjectionPair, tol: float = 1e-10,
                  name: str = "kraus_channel", **context) -> tuple[np.ndarray, CheckResult]:
    """Apply the swap channel T -> (T + P T P) / 2 in Kraus form.

    The Kraus operators are I / sqrt(2) and P / sqrt(2); the sum is
    evaluated as an equal mixture of the two unitary conjugations so the
    identity maps to itself exactly. The check covers trace preservation
    (relative ``tol``), exact unitality, Kraus completeness and agreement
    with ``project_gram(G, proj, "PI")`` to 1e-12.
    """
    M = _matrix(G)
    n = M.shape[0]
    P = proj.P
    unitaries = (np.eye(n), P)

    def channel(X):
        out = np.zeros_like(X)
        for U in unitaries:
            out += 0.5 * (U @ X @ U.T)
        return _symmetrize(out)

    GG = channel(M)
    tr = float(np.trace(M))
    trace_gap = abs(float(np.trace(GG)) - tr) / max(abs(tr), np.finfo(float).tiny)
    I = np.eye(n)
    unital = np.array_equal(channel(I), I)
    kraus = [np.sqrt(0.5) * U for U in unitaries]
    completeness = float(np.max(np.abs(sum(K.T @ K for K in kraus) - I)))
    pi_gap = float(np.max(np.abs(GG - project_gram(M, proj, "PI"))))
    # sub-assertions with their own tolerances are rescaled onto ``tol``
    margin = -max(trace_gap, completeness * tol / 1e-14, pi_gap * tol / 1e-12)
    if not unital:
        margin = -np.inf
    check = CheckResult.from_margin(name, margin, tol, trace_gap=trace_gap,
                                    unital=unital, pi_gap=pi_gap, **context)
    return GG, check
