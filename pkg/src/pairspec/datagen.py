"""Seeded synthetic points, pair samples and smooth target functions.

All randomness flows through ``numpy.random.Generator`` with the PCG64 bit
generator, which produces the same stream on every platform for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pairspec.kernels import PairSample, PointSet, all_pairs, close_under_swap
from pairspec.regression import TargetFunction

TARGET_KINDS = ("symmetric", "antisymmetric", "ranking", "generic")
EXHAUSTIVE_MAX_POINTS = 12


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def gen_points(n: int, d: int, seed) -> PointSet:
    """``n`` points uniform in [0, 1]^d."""
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    return PointSet(make_rng(seed).uniform(0.0, 1.0, size=(n, d)))


def sample_pairs(n_points: int, seed, max_pairs: int = 64) -> PairSample:
    """All ordered pairs for small point sets, else a random swap-closed subset.

    The subset draws ``max_pairs // 2`` distinct unordered pairs {i <= j}
    and adds their swaps, so it holds at most ``max_pairs`` pairs.
    """
    if n_points <= EXHAUSTIVE_MAX_POINTS:
        return all_pairs(n_points)
    rng = make_rng(seed)
    iu, ju = np.triu_indices(n_points)
    m = min(max(max_pairs // 2, 1), iu.shape[0])
    pick = np.sort(rng.choice(iu.shape[0], size=m, replace=False))
    return close_under_swap(PairSample(np.column_stack([iu[pick], ju[pick]])))


class _SmoothFn:
    """Random mixture of a few low-frequency cosines plus a linear term."""

    def __init__(self, rng: np.random.Generator, dim: int, terms: int = 3, max_freq: int = 2):
        self.freqs = rng.integers(0, max_freq + 1, size=(terms, dim)).astype(np.float64)
        self.phases = rng.uniform(0.0, 2.0 * np.pi, size=terms)
        self.amps = rng.normal(0.0, 1.0, size=terms) / np.sqrt(terms)
        self.lin = rng.normal(0.0, 0.5, size=dim)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        waves = np.cos(np.pi * X @ self.freqs.T + self.phases)
        return waves @ self.amps + X @ self.lin


@dataclass
class SmoothTarget:
    """A smooth function of a pair whose swap symmetry holds exactly by construction.

    symmetric:      g(v) g(v') + (h(v) + h(v'))
    antisymmetric:  q(v, v') - q(v', v)
    ranking:        r(v) - r(v')
    generic:        q(v, v')
    """

    kind: str
    dim: int
    seed: int | None = None
    max_freq: int = 2

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}; expected one of {TARGET_KINDS}")
        rng = make_rng(self.seed)
        f = self.max_freq
        if self.kind == "symmetric":
            self._g = _SmoothFn(rng, self.dim, max_freq=f)
            self._h = _SmoothFn(rng, self.dim, max_freq=f)
        elif self.kind == "ranking":
            self._r = _SmoothFn(rng, self.dim, max_freq=f)
        else:
            self._q = _SmoothFn(rng, 2 * self.dim, max_freq=f)

    @property
    def symmetry(self) -> str:
        if self.kind == "ranking":
            return "antisymmetric"
        return self.kind

    def __call__(self, V: np.ndarray, W: np.ndarray) -> np.ndarray:
        V = np.atleast_2d(V)
        W = np.atleast_2d(W)
        if self.kind == "symmetric":
            return self._g(V) * self._g(W) + (self._h(V) + self._h(W))
        if self.kind == "ranking":
            return self._r(V) - self._r(W)
        forward = self._q(np.hstack([V, W]))
        if self.kind == "generic":
            return forward
        return forward - self._q(np.hstack([W, V]))

    def on_sample(self, points: PointSet, sample: PairSample) -> TargetFunction:
        sample.check_indices(len(points))
        V = points.points[sample.pairs[:, 0]]
        W = points.points[sample.pairs[:, 1]]
        return TargetFunction(self(V, W), self.symmetry)


def gen_target(kind: str, points: PointSet, sample: PairSample, seed) -> TargetFunction:
    """Values of a seeded smooth target of the given kind on ``sample``."""
    return SmoothTarget(kind, points.dim, seed).on_sample(points, sample)


def grid_points(dim: int, per_axis: int = 15, max_pairs: int = 225) -> PointSet:
    """Tensor grid over [0, 1]^dim, coarsened until all ordered pairs fit in ``max_pairs``."""
    m = per_axis
    while m > 1 and (m ** dim) ** 2 > max_pairs:
        m -= 1
    axes = [np.linspace(0.0, 1.0, m)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointSet(np.column_stack([a.ravel() for a in mesh]))


def decay_seeds(seed) -> tuple[int, int, int]:
    """Independent (target, points, pairs) seeds for an approximation-decay run."""
    state = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
    return int(state[0]), int(state[1]), int(state[2])
