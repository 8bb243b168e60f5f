"""Pairwise kernels on ordered pairs of points and their symmetry transforms."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from pairspec import _accel

BASE_KINDS = ("linear", "polynomial", "gaussian")
CONSTRUCTIONS = ("kronecker", "pointwise")
TRANSFORMS = ("none", "permuted", "permutation_invariant", "symmetric", "antisymmetric")
SWAP_MODES = ("symmetric", "antisymmetric", "unlabeled")

_BASE_CODE = {
    "linear": _accel.BASE_LINEAR,
    "polynomial": _accel.BASE_POLYNOMIAL,
    "gaussian": _accel.BASE_GAUSSIAN,
}
_CONSTRUCTION_CODE = {
    "kronecker": _accel.CONSTRUCTION_KRONECKER,
    "pointwise": _accel.CONSTRUCTION_POINTWISE,
}
_TRANSFORM_CODE = {
    "none": _accel.TRANSFORM_NONE,
    "permuted": _accel.TRANSFORM_PERMUTED,
    "permutation_invariant": _accel.TRANSFORM_PI,
    "symmetric": _accel.TRANSFORM_SYMMETRIC,
    "antisymmetric": _accel.TRANSFORM_ANTISYMMETRIC,
}

PSD_REL_TOL = 1e-10


class PSDViolation(ValueError):
    """A Gram matrix has an eigenvalue below ``-PSD_REL_TOL * trace``."""


@dataclass(frozen=True)
class PointSet:
    """Sample of the base domain, one point per row."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a non-empty n x d array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class PairSample:
    """Ordered index pairs over a PointSet, optionally labelled.

    ``swap_closed`` is derived from the pairs rather than trusted from input.
    """

    pairs: np.ndarray
    labels: np.ndarray | None = None
    swap_closed: bool = field(init=False)

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64)
        if pairs.size == 0:
            pairs = pairs.reshape(0, 2)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"pairs must have shape (n, 2), got {pairs.shape}")
        if np.any(pairs < 0):
            raise ValueError("pair indices must be non-negative")
        seen = set()
        for i, j in pairs.tolist():
            if (i, j) in seen:
                raise ValueError(f"duplicate pair ({i}, {j})")
            seen.add((i, j))
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
            if labels.shape[0] != pairs.shape[0]:
                raise ValueError(
                    f"{labels.shape[0]} labels for {pairs.shape[0]} pairs"
                )
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        closed = all((j, i) in seen for i, j in seen)
        object.__setattr__(self, "swap_closed", closed)

    def __len__(self) -> int:
        return self.pairs.shape[0]

    def missing_swaps(self) -> list[tuple[int, int]]:
        present = set(map(tuple, self.pairs.tolist()))
        return [(j, i) for i, j in self.pairs.tolist() if (j, i) not in present]

    def check_indices(self, n_points: int) -> None:
        if len(self) and int(self.pairs.max()) >= n_points:
            raise IndexError(
                f"pair index {int(self.pairs.max())} out of range for {n_points} points"
            )

    @property
    def sample_id(self) -> str:
        return hashlib.sha1(self.pairs.tobytes()).hexdigest()[:12]


@dataclass(frozen=True)
class KernelSpec:
    """Base kernel, pairwise construction, symmetry transform and scale."""

    base: str = "gaussian"
    gamma: float = 1.0
    degree: int = 2
    offset: float = 1.0
    construction: str = "kronecker"
    transform: str = "none"
    scale: float = 1.0

    def __post_init__(self):
        if self.base not in BASE_KINDS:
            raise ValueError(f"unknown base kernel {self.base!r}; expected one of {BASE_KINDS}")
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"degree must be a positive integer, got {self.degree}")
        if not self.offset >= 0:
            raise ValueError(f"offset must be >= 0, got {self.offset}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")
        object.__setattr__(self, "degree", int(self.degree))

    def with_transform(self, transform: str) -> "KernelSpec":
        return replace(self, transform=transform)

    @property
    def spec_id(self) -> str:
        items = [f"{k}={v}" for k, v in sorted(self.to_flat().items())]
        return ";".join(items)

    def to_flat(self) -> dict[str, object]:
        """Flat key-value form used by config files."""
        return {
            "base.kind": self.base,
            "base.gamma": self.gamma,
            "base.degree": self.degree,
            "base.offset": self.offset,
            "construction": self.construction,
            "transform": self.transform,
            "scale": self.scale,
        }

    @classmethod
    def from_flat(cls, cfg: dict) -> "KernelSpec":
        known = {"base.kind", "base.gamma", "base.degree", "base.offset",
                 "construction", "transform", "scale"}
        unknown = [k for k in cfg if k not in known]
        if unknown:
            raise ValueError(f"unknown kernel config keys: {sorted(unknown)}")
        kw = {}
        if "base.kind" in cfg:
            kw["base"] = str(cfg["base.kind"])
        if "base.gamma" in cfg:
            kw["gamma"] = float(cfg["base.gamma"])
        if "base.degree" in cfg:
            deg = float(cfg["base.degree"])
            if deg != int(deg):
                raise ValueError(f"base.degree must be an integer, got {cfg['base.degree']}")
            kw["degree"] = int(deg)
        if "base.offset" in cfg:
            kw["offset"] = float(cfg["base.offset"])
        if "construction" in cfg:
            kw["construction"] = str(cfg["construction"])
        if "transform" in cfg:
            kw["transform"] = str(cfg["transform"])
        if "scale" in cfg:
            kw["scale"] = float(cfg["scale"])
        return cls(**kw)


@dataclass(frozen=True)
class GramMatrix:
    """Exactly symmetric kernel matrix over a pair sample.

    ``ref_trace`` is the trace of the untransformed kernel on the same
    sample. Projected kernels can cancel to rounding noise, so PSD
    tolerances are taken relative to the larger of the two traces.
    """

    values: np.ndarray
    spec_id: str = ""
    pair_sample_id: str = ""
    ref_trace: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError(f"Gram matrix must be square, got shape {vals.shape}")
        if not np.array_equal(vals, vals.T):
            raise ValueError("Gram matrix is not exactly symmetric")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.values))

    @property
    def tol_trace(self) -> float:
        return max(self.trace, self.ref_trace)


def _as_point(v, name) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d point, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite coordinates")
    return arr


def eval_base(spec: KernelSpec, v, w) -> float:
    """Base kernel value between two points."""
    v = _as_point(v, "v")
    w = _as_point(w, "w")
    if v.shape != w.shape:
        raise ValueError(f"dimension mismatch: {v.shape[0]} vs {w.shape[0]}")
    if spec.base == "gaussian":
        diff = v - w
        return math.exp(-spec.gamma * float(np.dot(diff, diff)))
    dot = float(np.dot(v, w))
    if spec.base == "linear":
        return dot
    return (dot + spec.offset) ** spec.degree


def _construct(spec: KernelSpec, a, b) -> float:
    (v, vp), (w, wp) = a, b
    if spec.construction == "kronecker":
        return eval_base(spec, v, w) * eval_base(spec, vp, wp)
    return eval_base(spec, v, w)


def eval_pairwise(spec: KernelSpec, a: Sequence, b: Sequence) -> float:
    """Transformed pairwise kernel between pairs ``a = (v, v')`` and ``b``.

    The four-term averages are grouped so that the symmetric value is
    bit-identical, and the anti-symmetric value exactly negated, when the
    two points of either pair are swapped.
    """
    v, vp = (_as_point(x, "a") for x in a)
    w, wp = (_as_point(x, "b") for x in b)
    dims = {v.shape[0], vp.shape[0], w.shape[0], wp.shape[0]}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch among pair coordinates: {sorted(dims)}")
    a, a_sw = (v, vp), (vp, v)
    b, b_sw = (w, wp), (wp, w)
    t = spec.transform
    if t == "none":
        val = _construct(spec, a, b)
    elif t == "permuted":
        val = _construct(spec, a_sw, b_sw)
    elif t == "permutation_invariant":
        val = 0.5 * (_construct(spec, a, b) + _construct(spec, a_sw, b_sw))
    else:
        t1 = _construct(spec, a, b)
        t2 = _construct(spec, a_sw, b)
        t3 = _construct(spec, a, b_sw)
        t4 = _construct(spec, a_sw, b_sw)
        if t == "symmetric":
            val = 0.25 * ((t1 + t2) + (t3 + t4))
        else:
            val = 0.25 * ((t1 - t2) - (t3 - t4))
    return spec.scale * val


def _codes(spec: KernelSpec):
    return _BASE_CODE[spec.base], _CONSTRUCTION_CODE[spec.construction], _TRANSFORM_CODE[spec.transform]


def base_gram(spec: KernelSpec, X, Y=None) -> np.ndarray:
    """Base kernel matrix between two point arrays (exactly symmetric if Y is None)."""
    X = np.asarray(X, dtype=np.float64)
    kind = _BASE_CODE[spec.base]
    if Y is None:
        B = _accel.base_matrix(X, X, kind, spec.gamma, spec.degree, spec.offset)
        return np.triu(B) + np.triu(B, 1).T
    return _accel.base_matrix(X, np.asarray(Y, dtype=np.float64), kind,
                              spec.gamma, spec.degree, spec.offset)


def min_eigenvalue_guard(values: np.ndarray, ref_trace: float = 0.0) -> float:
    """Raise PSDViolation if the smallest eigenvalue is below -1e-10 * trace.

    The trace used is the larger of the matrix trace and ``ref_trace``.
    """
    if values.shape[0] == 0:
        return 0.0
    lo = float(np.linalg.eigvalsh(values)[0])
    tr = max(float(np.trace(values)), ref_trace)
    if lo < -PSD_REL_TOL * max(tr, 0.0):
        raise PSDViolation(
            f"Gram matrix not PSD: minimum eigenvalue {lo:.3e} below "
            f"-{PSD_REL_TOL:g} * trace ({tr:.3e})"
        )
    return lo


def build_gram(spec: KernelSpec, points: PointSet, sample: PairSample,
               check_psd: bool = True) -> GramMatrix:
    """Gram matrix of the transformed pairwise kernel over ``sample``."""
    if len(sample) == 0:
        raise ValueError("cannot build a Gram matrix over an empty sample")
    sample.check_indices(len(points))
    B = base_gram(spec, points.points)
    _, cons, tr = _codes(spec)
    G = _accel.pair_gram_sym(B, sample.pairs, cons, tr, spec.scale)
    ref = _raw_trace(spec, B, sample)
    if check_psd:
        min_eigenvalue_guard(G, ref)
    return GramMatrix(G, spec.spec_id, sample.sample_id, ref)


def _raw_trace(spec: KernelSpec, B: np.ndarray, sample: PairSample) -> float:
    """Trace of the untransformed kernel over ``sample``, summed in absolute value."""
    i, j = sample.pairs[:, 0], sample.pairs[:, 1]
    if spec.construction == "kronecker":
        diag = np.abs(B[i, i] * B[j, j])
    else:
        diag = np.abs(B[i, i])
    return float(spec.scale * np.sum(diag))


def cross_gram(spec: KernelSpec, points: PointSet, rows: PairSample,
               cols: PairSample) -> np.ndarray:
    """Kernel values between ``rows`` pairs and ``cols`` pairs (not symmetrized)."""
    rows.check_indices(len(points))
    cols.check_indices(len(points))
    B = base_gram(spec, points.points)
    _, cons, tr = _codes(spec)
    return _accel.pair_gram(B, rows.pairs, cols.pairs, cons, tr, spec.scale)


def normalize_pairwise(spec: KernelSpec, points: PointSet, sample: PairSample) -> KernelSpec:
    """Rescale ``spec`` so its largest diagonal value over the sample is 1."""
    if len(sample) == 0:
        raise ValueError("cannot normalize over an empty sample")
    if spec.transform not in ("none", "permutation_invariant"):
        raise ValueError(
            f"normalization is defined on the un-projected kernel; got transform {spec.transform!r}"
        )
    sample.check_indices(len(points))
    unit = replace(spec, scale=1.0)
    B = base_gram(unit, points.points)
    i, j = sample.pairs[:, 0], sample.pairs[:, 1]
    if unit.construction == "kronecker":
        diag = B[i, i] * B[j, j]
        swapped = B[j, j] * B[i, i]
    else:
        diag = B[i, i]
        swapped = B[j, j]
    if unit.transform == "permutation_invariant":
        diag = 0.5 * (diag + swapped)
    top = float(np.max(diag))
    if not top > 0:
        raise ValueError(f"degenerate kernel: maximum diagonal value {top} <= 0")
    return replace(spec, scale=1.0 / top)


def close_under_swap(sample: PairSample, mode: str = "unlabeled") -> PairSample:
    """Add the swapped pair (j, i) for every (i, j) that lacks one.

    Added labels copy the original (``symmetric``) or negate it
    (``antisymmetric``). Originals keep their order; added swaps follow in
    the order of their originals.
    """
    if mode not in SWAP_MODES:
        raise ValueError(f"unknown swap mode {mode!r}; expected one of {SWAP_MODES}")
    if mode != "unlabeled" and sample.labels is None:
        raise ValueError(f"mode {mode!r} requires labels")
    pairs = sample.pairs.tolist()
    labels = None if sample.labels is None else sample.labels.tolist()
    if mode == "antisymmetric":
        for (i, j), y in zip(pairs, labels):
            if i == j and y != 0:
                raise ValueError(
                    f"diagonal pair ({i}, {i}) has label {y}; anti-symmetric labels must vanish there"
                )
    if sample.swap_closed:
        return sample
    present = set(map(tuple, pairs))
    new_pairs = list(pairs)
    new_labels = None if labels is None else list(labels)
    for idx, (i, j) in enumerate(pairs):
        if (j, i) in present:
            continue
        present.add((j, i))
        new_pairs.append((j, i))
        if new_labels is not None:
            y = labels[idx]
            new_labels.append(-y if mode == "antisymmetric" else y)
    return PairSample(np.array(new_pairs, dtype=np.int64),
                      None if new_labels is None else np.array(new_labels))


def all_pairs(n_points: int) -> PairSample:
    """Every ordered pair (i, j), row-major; swap-closed by construction."""
    idx = np.arange(n_points)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    return PairSample(np.column_stack([ii.ravel(), jj.ravel()]))


def pair_coordinates(points: PointSet, sample: PairSample) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of the first and second point of every pair."""
    sample.check_indices(len(points))
    return points.points[sample.pairs[:, 0]], points.points[sample.pairs[:, 1]]


def iter_pairs(points: PointSet, sample: PairSample) -> Iterable[tuple[np.ndarray, np.ndarray]]:
    for i, j in sample.pairs.tolist():
        yield points.points[i], points.points[j]
