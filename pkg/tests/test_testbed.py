import json

import numpy as np
import pytest

from pairspec.kernels import KernelSpec
from pairspec.testbed import (
    DEFAULT_TOLERANCES,
    SuiteConfig,
    doubly_stochastic_pair,
    effdim_order_check,
    run_suite,
    summarize,
)
from pairspec.spectral import check_majorization

THEOREM_CHECKS = {
    "gram_projection_identity", "eigen_dominance_S", "eigen_dominance_A", "commuting_family",
    "kraus_channel", "majorization", "effdim_majorization_order", "effdim_strict_sequences",
    "effdim_ordering", "bias_residual_consistency", "bias_equality_symmetric",
    "bias_equality_antisymmetric", "bias_bounds_symmetric", "bias_bounds_antisymmetric",
}


class TestConfig:
    def test_defaults(self):
        cfg = SuiteConfig()
        assert cfg.tolerances == DEFAULT_TOLERANCES
        assert len(cfg.specs) == 3

    @pytest.mark.parametrize("kw", [dict(trials=0), dict(sizes=()), dict(reg_grid=(0.0,)),
                                    dict(dims=(0,)), dict(tolerances={"nope": 1.0}),
                                    dict(specs=("gaussian",))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SuiteConfig(**kw)

    def test_flat_roundtrip(self):
        cfg = SuiteConfig(master_seed=7, sizes=(4, 5), trials=3, decay=False,
                          specs=(KernelSpec("linear", construction="pointwise"),),
                          tolerances={"effdim_ordering": 1e-8})
        assert SuiteConfig.from_flat(cfg.to_flat()) == cfg

    def test_flat_unknown(self):
        with pytest.raises(ValueError, match="unknown"):
            SuiteConfig.from_flat({"seeds": 3})


class TestSuite:
    cfg = SuiteConfig(trials=1, sizes=(6,), decay=False)

    def test_single_trial_all_pass(self):
        rep = run_suite(self.cfg)
        assert rep.all_passed, [c for c in rep.checks if not c.passed]
        assert THEOREM_CHECKS <= set(rep.names())
        assert rep.summary == summarize(rep.checks)
        assert rep.summary["total"] == len(THEOREM_CHECKS) * len(self.cfg.specs)

    def test_deterministic(self):
        a = json.dumps(run_suite(self.cfg).to_json(), sort_keys=True)
        b = json.dumps(run_suite(self.cfg).to_json(), sort_keys=True)
        assert a == b

    def test_seed_matters(self):
        a = [c.margin for c in run_suite(self.cfg).checks]
        b = [c.margin for c in run_suite(SuiteConfig(trials=1, sizes=(6,), decay=False,
                                                     master_seed=1)).checks]
        assert a != b

    def test_injected_error_fails_gram_identity(self):
        rep = run_suite(SuiteConfig(trials=1, sizes=(4,), decay=False, inject_gram_error=1e-3))
        failed = {c.name for c in rep.checks if not c.passed}
        assert failed == {"gram_projection_identity"}
        assert not rep.all_passed

    def test_json_schema(self):
        js = run_suite(self.cfg).to_json()
        assert set(js) == {"summary", "config", "checks"}
        for c in js["checks"]:
            assert set(c) == {"name", "passed", "margin", "tolerance", "context"}
        json.dumps(js)

    def test_decay_included(self):
        rep = run_suite(SuiteConfig(trials=1, sizes=(4,), specs=(KernelSpec(),)))
        names = set(rep.names())
        assert {"decay_threshold", "decay_ratio", "decay_antisymmetry"} <= names
        assert rep.all_passed


def test_hundred_trials_all_sizes():
    """Every check passes at default tolerances for 100 trials at n_v in {4, 8, 16}."""
    rep = run_suite(SuiteConfig(trials=100, sizes=(4, 8, 16), dims=(1, 2, 3), decay=False))
    bad = [c for c in rep.checks if not c.passed]
    assert not bad, bad[:3]


class TestSequenceProperty:
    def test_doubly_stochastic_majorized(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            r, s = doubly_stochastic_pair(rng, int(rng.integers(2, 30)))
            assert check_majorization(r, s, 1e-12).majorized
            assert not np.allclose(r, s)
            assert effdim_order_check(r, s, [1e-6, 1e-2, 1.0, 1e2], 0.0, strict=True).passed

    def test_strict_fails_on_equal(self):
        s = np.array([2.0, 1.0])
        assert not effdim_order_check(s, s, [1.0], 0.0, strict=True).passed
        assert effdim_order_check(s, s, [1.0], 1e-9).passed

    def test_reversed_order_fails(self):
        r, s = np.array([1.0, 1.0]), np.array([2.0, 0.0])
        assert not effdim_order_check(s, r, [0.5], 1e-9).passed
