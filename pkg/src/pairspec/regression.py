"""Kernel ridge regression over pairs and the regularization-bias functional."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from pairspec.kernels import (
    KernelSpec,
    PairSample,
    PointSet,
    build_gram,
    close_under_swap,
    cross_gram,
    normalize_pairwise,
)
from pairspec.spectral import (
    CheckResult,
    Spectrum,
    empirical_operator,
    permutation_matrix,
)

SYMMETRIES = ("symmetric", "antisymmetric", "generic")


@dataclass(frozen=True)
class TargetFunction:
    """Target values aligned with a PairSample, with declared swap symmetry."""

    values: np.ndarray
    symmetry: str = "generic"

    def __post_init__(self):
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"unknown symmetry {self.symmetry!r}")
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise ValueError("target values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]

    def symmetry_gap(self, perm: np.ndarray) -> float:
        """Largest violation of the declared symmetry under the swap ``perm``."""
        if self.symmetry == "symmetric":
            return float(np.max(np.abs(self.values - self.values[perm]), initial=0.0))
        if self.symmetry == "antisymmetric":
            return float(np.max(np.abs(self.values + self.values[perm]), initial=0.0))
        return 0.0


@dataclass(frozen=True)
class RegularizedSolution:
    coefficients: np.ndarray
    reg: float
    spec_id: str = ""
    sample_id: str = ""


@dataclass
class BiasReport:
    reg: float
    bias_full: float
    bias_pi: float
    bias_s: float
    bias_a: float
    lower_factor: float
    upper_factor: float
    bounds_hold: bool
    equality_holds: bool

    def to_json(self) -> dict:
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                for k, v in asdict(self).items()}


def _check_reg(reg: float) -> float:
    reg = float(reg)
    if not reg > 0:
        raise ValueError(f"regularization must be > 0, got {reg}")
    return reg


def _target_values(y) -> np.ndarray:
    return np.asarray(y.values if isinstance(y, TargetFunction) else y, dtype=np.float64)


def krr_fit(G, y, reg: float, spec_id: str = "", sample_id: str = "") -> RegularizedSolution:
    """Dual coefficients minimizing (1/n)|y - G a|^2 + reg a'G a.

    Solves (G + reg n I) a = y by Cholesky.
    """
    reg = _check_reg(reg)
    M = np.asarray(getattr(G, "values", G), dtype=np.float64)
    y = _target_values(y)
    n = M.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"{y.shape[0]} targets for a {n} x {n} Gram matrix")
    H = M + reg * n * np.eye(n)
    try:
        alpha = scipy.linalg.cho_solve(scipy.linalg.cho_factor(H, lower=True), y)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise np.linalg.LinAlgError(
            f"regularized system not positive definite (condition estimate {np.linalg.cond(H):.3e})"
        ) from exc
    resid = float(np.linalg.norm(H @ alpha - y))
    if resid > 1e-8 * max(float(np.linalg.norm(y)), np.finfo(float).tiny):
        raise np.linalg.LinAlgError(
            f"solve residual {resid:.3e} too large (condition estimate {np.linalg.cond(H):.3e})"
        )
    return RegularizedSolution(alpha, reg, spec_id or getattr(G, "spec_id", ""),
                               sample_id or getattr(G, "pair_sample_id", ""))


def krr_predict(spec: KernelSpec, points: PointSet, train: PairSample,
                sol: RegularizedSolution, test: PairSample) -> np.ndarray:
    """Representer expansion sum_i a_i k(train_i, test_t)."""
    if sol.coefficients.shape[0] != len(train):
        raise ValueError(
            f"{sol.coefficients.shape[0]} coefficients for {len(train)} training pairs"
        )
    K = cross_gram(spec, points, test, train)
    return K @ sol.coefficients


def _spectral_coords(T: Spectrum, f) -> tuple[np.ndarray, np.ndarray]:
    f = _target_values(f)
    if f.shape[0] != T.vectors.shape[0]:
        raise ValueError(f"target of length {f.shape[0]} for operator of size {T.vectors.shape[0]}")
    return f, T.vectors.T @ f


def regularized_smoother(T: Spectrum, f, reg: float) -> np.ndarray:
    """V diag(lam / (lam + reg)) V' f in sample coordinates."""
    reg = _check_reg(reg)
    _, c = _spectral_coords(T, f)
    return T.vectors @ (T.values / (T.values + reg) * c)


def regularization_bias(T: Spectrum, f, reg: float) -> float:
    """reg^2 <f, (T + reg I)^-2 f> in the empirical inner product (1/n) sum a_i b_i."""
    reg = _check_reg(reg)
    f, c = _spectral_coords(T, f)
    n = f.shape[0]
    return float(reg * reg * np.sum(c * c / (T.values + reg) ** 2) / n)


def empirical_sq_norm(f) -> float:
    f = _target_values(f)
    return float(np.dot(f, f) / f.shape[0])


def bias_factors(reg: float) -> tuple[float, float]:
    """Lower and upper multipliers relating the bias of K^PI to that of K.

    Valid for kernels whose diagonal is at most 1.
    """
    reg = _check_reg(reg)
    a2 = reg * reg
    b2 = (reg + 1.0) ** 2
    lower = 1.0 - (a2 - b2) ** 2 / (a2 + b2) ** 2
    upper = 1.0 + 1.0 / (4.0 * a2 + 4.0 * reg)
    return lower, upper


def bias_bound_check(bias_full: float, bias_pi: float, reg: float, tol: float,
                     name: str = "bias_bounds", **context) -> CheckResult:
    lower, upper = bias_factors(reg)
    margin = min(bias_pi - lower * bias_full, upper * bias_full - bias_pi)
    return CheckResult.from_margin(name, margin, tol, reg=float(reg), lower_factor=lower,
                                   upper_factor=upper, **context)


def bias_equality_check(bias_pi: float, bias_matched: float, tol: float,
                        name: str = "bias_equality", **context) -> CheckResult:
    tol_abs = tol * max(bias_pi, 1e-300)
    return CheckResult.from_margin(name, -abs(bias_pi - bias_matched), tol_abs, **context)


def bias_report(spec: KernelSpec, points: PointSet, sample: PairSample, target: TargetFunction,
                reg: float, tol_equal: float = 1e-9, tol_bound: float = 1e-12,
                normalize: bool = True) -> BiasReport:
    """Regularization bias of K, K^PI, K^S and K^A on one swap-closed sample.

    The kernel is first normalized to unit maximum diagonal on the sample.
    ``equality_holds`` compares K^PI with K^S (symmetric target) or K^A
    (anti-symmetric target); it is False for generic targets.
    """
    return bias_reports(spec, points, sample, target, [reg], tol_equal, tol_bound, normalize)[0]


def bias_reports(spec: KernelSpec, points: PointSet, sample: PairSample, target: TargetFunction,
                 regs: Sequence[float], tol_equal: float = 1e-9, tol_bound: float = 1e-12,
                 normalize: bool = True) -> list[BiasReport]:
    proj = permutation_matrix(sample)
    if len(target) != len(sample):
        raise ValueError(f"{len(target)} target values for {len(sample)} pairs")
    if target.symmetry_gap(proj.perm) > 1e-12:
        raise ValueError(f"target is not {target.symmetry} on this sample")
    base = spec.with_transform("none")
    if normalize:
        base = normalize_pairwise(base, points, sample)
    spectra = {
        t: empirical_operator(build_gram(base.with_transform(t), points, sample))
        for t in ("none", "permutation_invariant", "symmetric", "antisymmetric")
    }
    out = []
    for reg in regs:
        b = {t: regularization_bias(T, target, reg) for t, T in spectra.items()}
        lower, upper = bias_factors(reg)
        bounds = bias_bound_check(b["none"], b["permutation_invariant"], reg, tol_bound).passed
        if target.symmetry == "symmetric":
            eq = bias_equality_check(b["permutation_invariant"], b["symmetric"], tol_equal).passed
        elif target.symmetry == "antisymmetric":
            eq = bias_equality_check(b["permutation_invariant"], b["antisymmetric"], tol_equal).passed
        else:
            eq = False
        out.append(BiasReport(float(reg), b["none"], b["permutation_invariant"], b["symmetric"],
                              b["antisymmetric"], lower, upper, bounds, eq))
    return out


@dataclass
class DecayPoint:
    n: int
    sup_error: float
    swap_gap: float
    n_train: int


_DECAY_TRANSFORM = {"antisymmetric": "antisymmetric", "ranking": "antisymmetric",
                    "symmetric": "symmetric"}


def decay_run(spec: KernelSpec, target_kind: str, sizes: Sequence[int], seed,
              dim: int = 2, reg: float = 1e-6, max_freq: int = 4,
              target=None) -> list[DecayPoint]:
    """Fit a seeded smooth target on nested samples and measure grid sup error.

    For size n the training sample is n pairs (2t, 2t + 1) of fresh uniform
    points, closed under swap with virtual examples. Errors are measured on
    every ordered pair of a fixed tensor grid (at most 225 pairs).
    ``swap_gap`` is the largest deviation of the predictions from exact
    swap (anti-)symmetry. ``target`` replaces the seeded smooth target with
    any callable ``f(V, W)`` of the declared kind.
    """
    from pairspec.datagen import SmoothTarget, decay_seeds, gen_points, grid_points

    if target_kind not in _DECAY_TRANSFORM:
        raise ValueError(f"unknown target kind {target_kind!r}")
    if spec.transform != _DECAY_TRANSFORM[target_kind]:
        raise ValueError(
            f"target kind {target_kind!r} needs transform {_DECAY_TRANSFORM[target_kind]!r}, "
            f"got {spec.transform!r}"
        )
    sizes = [int(n) for n in sizes]
    if not sizes or any(n < 1 for n in sizes):
        raise ValueError(f"sizes must be positive integers, got {sizes}")
    t_seed, p_seed, _ = decay_seeds(seed)
    if target is None:
        target = SmoothTarget(target_kind, dim, t_seed, max_freq=max_freq)
    pool = gen_points(2 * max(sizes), dim, p_seed)
    grid = grid_points(dim)
    points = PointSet(np.vstack([pool.points, grid.points]))
    off, g = len(pool), len(grid)
    gi, gj = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
    test = PairSample(np.column_stack([gi.ravel(), gj.ravel()]) + off)
    truth = _pair_values(target, points, test)
    swap = gj.ravel() * g + gi.ravel()
    sign = -1.0 if spec.transform == "antisymmetric" else 1.0
    mode = "antisymmetric" if sign < 0 else "symmetric"

    out = []
    for n in sizes:
        base = np.column_stack([2 * np.arange(n), 2 * np.arange(n) + 1])
        labelled = PairSample(base, _pair_values(target, points, PairSample(base)))
        train = close_under_swap(labelled, mode)
        G = build_gram(spec, points, train)
        sol = krr_fit(G, train.labels, reg)
        pred = krr_predict(spec, points, train, sol, test)
        err = float(np.max(np.abs(pred - truth)))
        gap = float(np.max(np.abs(pred - sign * pred[swap])))
        out.append(DecayPoint(n, err, gap, len(train)))
    return out


def _pair_values(target, points: PointSet, sample: PairSample) -> np.ndarray:
    V = points.points[sample.pairs[:, 0]]
    W = points.points[sample.pairs[:, 1]]
    return np.asarray(target(V, W), dtype=np.float64).reshape(-1)


def approximation_decay(spec: KernelSpec, target_kind: str, sizes: Sequence[int], seed,
                        **kwargs) -> list[tuple[int, float]]:
    """(n, sup_error) pairs of :func:`decay_run`."""
    return [(p.n, p.sup_error) for p in decay_run(spec, target_kind, sizes, seed, **kwargs)]
