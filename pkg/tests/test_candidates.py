"""Candidate bank construction: mean models, residuals, and the five
candidate families."""

import numpy as np
import pytest

from piagg.candidates import (
    CandidateSpec,
    build_bank,
    default_bank_specs,
    fit_candidate_set,
    fit_mean,
    residuals,
)
from piagg.dataset import DataTable, gen_hetero_sim
from piagg.errors import EmptyBin
from piagg.numerics import weighted_quantile


class ZeroMean:
    def predict(self, x):
        return np.zeros(np.atleast_2d(x).shape[0])


def _labeled(rng, n=40, d=2):
    x = rng.normal(size=(n, d))
    y = x[:, 0] + 0.5 * rng.normal(size=n)
    return DataTable(x, y)


class TestFitMean:
    def test_ols_exact_recovery(self):
        x = np.linspace(0, 4, 30)[:, None]
        t = DataTable(x, 3.0 * x[:, 0] - 1.0)
        m = fit_mean(t, "ols")
        assert np.allclose(m.predict(x), t.y, atol=1e-10)

    def test_constant_response(self):
        t = DataTable(np.arange(10.0)[:, None], np.full(10, 2.5))
        m = fit_mean(t, "ols")
        assert np.allclose(m.predict(t.x), 2.5, atol=1e-10)

    def test_knn1_identity_on_training_point(self):
        rng = np.random.default_rng(0)
        t = _labeled(rng)
        m = fit_mean(t, "knn", k=1)
        assert np.allclose(m.predict(t.x[:5]), t.y[:5])


class TestResiduals:
    def test_exact_mean_gives_zero(self):
        x = np.linspace(0, 4, 15)[:, None]
        t = DataTable(x, 2.0 * x[:, 0])
        r = residuals(t, fit_mean(t, "ols"))
        assert np.max(r.r2) <= 1e-18

    def test_constant_offset(self):
        t = DataTable(np.zeros((4, 1)), np.full(4, 3.0))
        r = residuals(t, ZeroMean())
        assert np.allclose(r.r2, 9.0)

    def test_matches_loop(self):
        rng = np.random.default_rng(1)
        t = _labeled(rng)
        m = fit_mean(t, "ols")
        r = residuals(t, m)
        for i in range(t.n):
            expect = (t.y[i] - m.predict(t.x[i:i + 1])[0]) ** 2
            assert r.r2[i] == pytest.approx(expect, rel=1e-12)


class TestBuildBank:
    def test_constant_one_columns(self):
        rng = np.random.default_rng(2)
        t = _labeled(rng)
        bank = build_bank(t, residuals(t, ZeroMean()), t.x[:7],
                          [CandidateSpec("constant_one")])
        assert np.array_equal(bank.phi_source, np.ones((t.n, 1)))
        assert np.array_equal(bank.phi_target, np.ones((7, 1)))

    def test_knn_all_neighbors_degenerates_to_global_quantile(self):
        rng = np.random.default_rng(3)
        t = _labeled(rng, n=60)
        r = residuals(t, ZeroMean())
        bank = build_bank(t, r, None, [CandidateSpec("knn_quantile", k=60, tau=0.7)])
        glob = weighted_quantile(r.r2, np.ones(60), 0.7)
        assert np.allclose(bank.phi_source, glob)

    def test_kernel_variance_recovers_second_moment_at_origin(self):
        # true E[Y^2 | x=0] = 1/3 for the heteroskedastic simulator
        t = gen_hetero_sim(20000, seed=3)
        bank = fit_candidate_set(t, residuals(t, ZeroMean()),
                                 [CandidateSpec("kernel_variance", bandwidth=0.1)])
        val = bank.evaluate(np.array([[0.0]]))[0, 0]
        assert 0.25 <= val <= 0.42

    def test_linear_quantile_clamped_nonnegative(self):
        rng = np.random.default_rng(4)
        t = _labeled(rng, n=80)
        bank = build_bank(t, residuals(t, ZeroMean()), rng.normal(size=(50, 2)) * 5,
                          [CandidateSpec("linear_quantile_sq", tau=0.5)])
        assert np.min(bank.phi_source) >= 0.0
        assert np.min(bank.phi_target) >= 0.0

    def test_binned_quantile_empty_bin(self):
        x = np.zeros((6, 1))  # all mass in one spot: only one bin occupied
        t = DataTable(x, np.arange(6.0))
        with pytest.raises(EmptyBin):
            build_bank(t, residuals(t, ZeroMean()), None,
                       [CandidateSpec("binned_quantile", bins=3, tau=0.5)])


class TestBankInvariants:
    def test_all_entries_nonnegative(self):
        t = gen_hetero_sim(400, seed=5)
        bank = build_bank(t, residuals(t, fit_mean(t, "ols")), t.x[:100],
                          default_bank_specs())
        assert np.min(bank.phi_source) >= 0.0
        assert np.min(bank.phi_target) >= 0.0

    def test_knn_quantile_monotone_in_tau(self):
        rng = np.random.default_rng(6)
        t = _labeled(rng, n=100)
        r = residuals(t, ZeroMean())
        eval_x = rng.normal(size=(40, 2))
        lo = fit_candidate_set(t, r, [CandidateSpec("knn_quantile", k=15, tau=0.3)])
        hi = fit_candidate_set(t, r, [CandidateSpec("knn_quantile", k=15, tau=0.8)])
        assert np.all(lo.evaluate(eval_x) <= hi.evaluate(eval_x))

    def test_training_permutation_invariance(self):
        rng = np.random.default_rng(7)
        t = _labeled(rng, n=70)
        r = residuals(t, ZeroMean())
        perm = rng.permutation(70)
        t_perm = DataTable(t.x[perm], t.y[perm])
        r_perm = residuals(t_perm, ZeroMean())
        eval_x = rng.normal(size=(25, 2))
        specs = [CandidateSpec("knn_quantile", k=9, tau=0.6),
                 CandidateSpec("kernel_variance", bandwidth=0.7),
                 CandidateSpec("binned_quantile", bins=4, tau=0.5),
                 CandidateSpec("constant_one")]
        a = fit_candidate_set(t, r, specs).evaluate(eval_x)
        b = fit_candidate_set(t_perm, r_perm, specs).evaluate(eval_x)
        assert np.allclose(a, b, atol=1e-10)


def test_spec_validation():
    with pytest.raises(ValueError):
        CandidateSpec("knn_quantile", k=0, tau=0.5)
    with pytest.raises(ValueError):
        CandidateSpec("linear_quantile_sq", tau=1.5)
    with pytest.raises(ValueError):
        CandidateSpec("mystery")
