"""Shape estimation, shrinkage, prediction, and model serialization."""

import json

import numpy as np
import pytest

from piagg.aggregate import (
    IntervalBatch,
    PiModel,
    ShapeModel,
    ShrinkResult,
    _solve_covering_primal,
    diagnose,
    fit_covariate_shift,
    fit_shape_cov_shift,
    fit_shape_source,
    fit_transport,
    hinge_constraint_value,
    model_from_dict,
    model_to_dict,
    predict_interval,
    shrink_cov_shift,
    shrink_source,
)
from piagg.candidates import CandidateBank, CandidateSpec, ResidualSet, build_bank
from piagg.dataset import DataTable, gen_hetero_sim
from piagg.errors import ShapeInfeasible, ShrinkExceedsOneWarning, ShrinkUnbounded
from piagg.transport import AffineMap


class ZeroMean:
    def predict(self, x):
        return np.zeros(np.atleast_2d(x).shape[0])


def _bank_from_matrices(phi_source, phi_target=None):
    k = phi_source.shape[1]
    specs = [CandidateSpec("constant_one")] * k
    return CandidateBank(specs, [], np.asarray(phi_source, float),
                         None if phi_target is None else np.asarray(phi_target, float))


def _resid(r2):
    return ResidualSet(np.asarray(r2, float), ZeroMean())


class TestShapeCovShift:
    def test_constant_bank_covers_max_residual(self):
        bank = _bank_from_matrices(np.ones((5, 1)), np.ones((3, 1)))
        r2 = [1.0, 4.0, 0.25, 2.0, 3.5]
        shape = fit_shape_cov_shift(bank, _resid(r2), np.ones(5))
        assert shape.alpha[0] == pytest.approx(4.0, abs=1e-9)

    def test_hinge_zero_budget_adds_delta(self):
        bank = _bank_from_matrices(np.ones((4, 1)), np.ones((2, 1)))
        r2 = [1.0, 2.0, 0.5, 1.5]
        shape = fit_shape_cov_shift(bank, _resid(r2), np.ones(4), mode="hinge",
                                    delta=0.3, epsilon=0.0)
        assert shape.alpha[0] == pytest.approx(2.3, abs=1e-8)

    def test_support_threshold_drops_rows(self):
        bank = _bank_from_matrices(np.ones((3, 1)), np.ones((2, 1)))
        w = np.array([1.0, 0.0, 1.0])
        shape = fit_shape_cov_shift(bank, _resid([1.0, 50.0, 2.0]), w,
                                    support_threshold=0.0)
        assert shape.alpha[0] == pytest.approx(2.0, abs=1e-9)

    def test_two_candidate_grid_oracle(self):
        # grid search along the coverage boundary; the cheapest feasible
        # alpha2 for each alpha1 is closed-form and the profile is convex
        rng = np.random.default_rng(5)
        for _ in range(25):
            phi_s = rng.uniform(0.1, 1.0, size=(3, 2))
            phi_t = rng.uniform(0.1, 1.0, size=(2, 2))
            r2 = rng.uniform(0.0, 1.0, size=3)
            bank = _bank_from_matrices(phi_s, phi_t)
            shape = fit_shape_cov_shift(bank, _resid(r2), np.ones(3))
            c = phi_t.mean(axis=0)

            def profile(a1):
                need = (r2[None, :] - a1[:, None] * phi_s[:, 0][None, :])
                a2 = np.clip((need / phi_s[:, 1][None, :]).max(axis=1), 0.0, None)
                return c[0] * a1 + c[1] * a2

            lo, hi, best = 0.0, 20.0, np.inf
            for _stage in range(12):
                a1 = np.linspace(lo, hi, 2001)
                vals = profile(a1)
                k = int(np.argmin(vals))
                best = min(best, float(vals[k]))
                step = (hi - lo) / 2000
                lo, hi = max(a1[k] - 2 * step, 0.0), a1[k] + 2 * step
            assert shape.objective_value == pytest.approx(best, abs=1e-6)

    def test_matches_direct_primal_solve(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(3, 60))
            k = int(rng.integers(1, 5))
            phi = rng.uniform(0.0, 1.0, size=(n, k))
            phi[:, 0] = 1.0
            r2 = rng.uniform(0, 3, size=n)
            obj = rng.uniform(0.05, 1.0, size=k)
            bank = _bank_from_matrices(phi, obj[None, :])
            shape = fit_shape_cov_shift(bank, _resid(r2), np.ones(n))
            ref = _solve_covering_primal(phi, r2, obj, 1e-9)
            assert shape.objective_value == pytest.approx(float(obj @ ref), abs=1e-7)

    def test_infeasible_without_usable_candidates(self):
        bank = _bank_from_matrices(np.zeros((2, 1)), np.ones((2, 1)))
        with pytest.raises(ShapeInfeasible):
            fit_shape_cov_shift(bank, _resid([1.0, 2.0]), np.ones(2))

    def test_hinge_constraint_transfers(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = 25
            phi = np.column_stack([np.ones(n), rng.uniform(0, 1, n)])
            r2 = rng.uniform(0, 2, n)
            w = rng.uniform(0.2, 2.0, n)
            bank = _bank_from_matrices(phi, rng.uniform(0.1, 1, size=(4, 2)))
            shape = fit_shape_cov_shift(bank, _resid(r2), w, mode="hinge",
                                        delta=0.2, epsilon=0.05)
            assert hinge_constraint_value(shape, bank, _resid(r2), w) <= 0.05 + 1e-9


class TestShapeSource:
    def test_constant_bank(self):
        bank = _bank_from_matrices(np.ones((4, 1)))
        shape = fit_shape_source(bank, _resid([0.5, 3.0, 1.0, 2.0]))
        assert shape.alpha[0] == pytest.approx(3.0, abs=1e-9)

    def test_zero_residuals_zero_weights(self):
        bank = _bank_from_matrices(np.ones((4, 1)))
        shape = fit_shape_source(bank, _resid(np.zeros(4)))
        assert shape.alpha[0] == pytest.approx(0.0, abs=1e-12)
        assert shape.objective_value == pytest.approx(0.0, abs=1e-12)

    def test_coverage_dominance(self):
        rng = np.random.default_rng(8)
        phi = np.column_stack([np.ones(30), rng.uniform(0, 1, 30)])
        r2 = rng.uniform(0, 2, 30)
        shape = fit_shape_source(_bank_from_matrices(phi), _resid(r2))
        assert np.all(phi @ shape.alpha >= r2 - 1e-7)

    def test_width_monotone_in_bank(self):
        rng = np.random.default_rng(9)
        phi_small = np.column_stack([np.ones(20), rng.uniform(0, 1, 20)])
        extra = rng.uniform(0, 1, size=(20, 2))
        phi_big = np.hstack([phi_small, extra])
        r2 = rng.uniform(0, 2, 20)
        obj_small = fit_shape_source(_bank_from_matrices(phi_small), _resid(r2))
        obj_big = fit_shape_source(_bank_from_matrices(phi_big), _resid(r2))
        assert obj_big.objective_value <= obj_small.objective_value + 1e-9


class TestShrinkCovShift:
    def test_zero_residuals(self):
        r = shrink_cov_shift(np.ones(3), np.zeros(3), np.ones(3), 0.1)
        assert r.lambda_hat == 0.0

    def test_one_violation_allowed(self):
        r = shrink_cov_shift(np.ones(3), np.array([1.0, 4.0, 9.0]), np.ones(3), 0.34)
        assert r.lambda_hat == 4.0
        assert r.achieved_violation == pytest.approx(1 / 3)

    def test_budget_above_total_mass(self):
        w = np.array([0.2, 0.3, 0.1])
        r = shrink_cov_shift(np.ones(3), np.array([1.0, 2.0, 3.0]), w,
                             alpha_level=0.25)
        assert r.lambda_hat == 0.0

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(10)
        f = rng.uniform(0.1, 2, 40)
        r2 = rng.uniform(0, 4, 40)
        w = rng.uniform(0, 2, 40)
        lams = [shrink_cov_shift(f, r2, w, a).lambda_hat
                for a in np.linspace(0.01, 0.99, 25)]
        assert np.all(np.diff(lams) <= 1e-15)

    def test_minimality(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 25))
            f = rng.uniform(0.1, 2, n)
            r2 = rng.uniform(0, 4, n)
            w = rng.uniform(0.1, 2, n)
            a = float(rng.uniform(0.05, 0.9))
            res = shrink_cov_shift(f, r2, w, a)
            assert res.achieved_violation <= a + 1e-12
            if res.lambda_hat > 0:
                lam_below = res.lambda_hat * (1 - 1e-9)
                viol = float(np.mean(w * (r2 > lam_below * f)))
                assert viol > a

    def test_unbounded_when_shape_vanishes(self):
        f = np.array([0.0, 1.0, 1.0])
        r2 = np.array([2.0, 0.1, 0.2])
        with pytest.raises(ShrinkUnbounded):
            shrink_cov_shift(f, r2, np.ones(3), alpha_level=0.2, floor=0.0)

    def test_floor_rescues_vanishing_shape(self):
        f = np.array([0.0, 1.0, 1.0])
        r2 = np.array([2.0, 0.1, 0.2])
        res = shrink_cov_shift(f, r2, np.ones(3), alpha_level=0.2, floor=1e-6)
        assert np.isfinite(res.lambda_hat)

    def test_normalized_variant(self):
        f = np.ones(4)
        r2 = np.array([1.0, 2.0, 3.0, 4.0])
        w = np.full(4, 0.5)  # mean 1/2: plain budget sees half the mass
        plain = shrink_cov_shift(f, r2, w, 0.3)
        normed = shrink_cov_shift(f, r2, w, 0.3, normalize_weights=True)
        assert plain.lambda_hat <= normed.lambda_hat


class TestShrinkSource:
    def test_zero_residuals(self):
        assert shrink_source(np.zeros(3), np.zeros(3), 0.1, 0.5).lambda_hat == 0.0

    def test_infimum_at_tie(self):
        r = shrink_source(np.full(4, 0.5), np.array([1.0, 1.0, 1.0, 100.0]),
                          0.25, 0.5)
        assert r.lambda_hat == 1.0
        assert r.achieved_violation == pytest.approx(0.25)

    def test_alpha_one(self):
        r = shrink_source(np.ones(5), np.arange(5.0), 1.0, 0.1)
        assert r.lambda_hat == 0.0

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(12)
        f = rng.uniform(0, 2, 30)
        r2 = rng.uniform(0, 4, 30)
        lams = [shrink_source(f, r2, a, 0.05).lambda_hat
                for a in np.linspace(0.01, 0.99, 25)]
        assert np.all(np.diff(lams) <= 1e-15)


def _tiny_model(alpha, lam, alg2=False):
    bank = build_bank(DataTable(np.zeros((3, 1)), np.zeros(3)),
                      _resid(np.zeros(3)), None, [CandidateSpec("constant_one")])
    mode = "source_exact" if alg2 else "cov_shift_exact"
    shape = ShapeModel(np.array([alpha]), mode)
    shrink = ShrinkResult(lam, 0.0, lam > 1.0)
    return PiModel(shape, bank, ZeroMean(), shrink, 0.05, None,
                   alg2_delta=0.0, floor=0.0, holdout_violation=0.0)


class TestPredict:
    def test_zero_shrink_degenerates(self):
        m = _tiny_model(alpha=9.0, lam=0.0)
        batch = predict_interval(m, np.linspace(-1, 1, 5)[:, None])
        assert np.array_equal(batch.lower, batch.upper)

    def test_constant_shape_interval(self):
        m = _tiny_model(alpha=9.0, lam=1.0)
        batch = predict_interval(m, np.zeros((4, 1)))
        assert np.allclose(batch.lower, -3.0)
        assert np.allclose(batch.upper, 3.0)

    def test_identity_transport_equals_no_shift(self):
        src = gen_hetero_sim(800, seed=4)
        x_new = np.linspace(-1, 1, 123)[:, None]
        m_id = fit_transport(src, None, 0.1, transport_map=AffineMap.identity(1), seed=2)
        m_none = fit_transport(src, None, 0.1, seed=2)
        b1 = predict_interval(m_id, x_new)
        b2 = predict_interval(m_none, x_new)
        assert np.max(np.abs(b1.lower - b2.lower)) <= 1e-9
        assert np.max(np.abs(b1.upper - b2.upper)) <= 1e-9


class TestDiagnose:
    def test_no_warning_below_one(self):
        import warnings as w
        m = _tiny_model(alpha=1.0, lam=0.8)
        with w.catch_warnings():
            w.simplefilter("error")
            report = diagnose(m)
        assert not report.lambda_exceeds_one

    def test_warning_above_one(self):
        m = _tiny_model(alpha=1.0, lam=1.3)
        with pytest.warns(ShrinkExceedsOneWarning):
            report = diagnose(m)
        assert report.lambda_exceeds_one

    def test_report_round_trips(self):
        m = _tiny_model(alpha=1.0, lam=0.8)
        report = diagnose(m)
        loaded = json.loads(json.dumps(report.to_dict()))
        assert loaded == report.to_dict()


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        src = gen_hetero_sim(600, seed=15)
        target = gen_hetero_sim(200, seed=16)
        m = fit_covariate_shift(src, target.x, 0.1, seed=3)
        doc = json.loads(json.dumps(model_to_dict(m)))
        m2 = model_from_dict(doc)
        assert m2.shrink.lambda_hat == m.shrink.lambda_hat
        assert np.array_equal(m2.shape.alpha, m.shape.alpha)
        assert m2.floor == m.floor
        x_new = np.linspace(-1, 1, 50)[:, None]
        b1 = predict_interval(m, x_new)
        b2 = predict_interval(m2, x_new)
        assert np.array_equal(b1.lower, b2.lower)
        assert np.array_equal(b1.upper, b2.upper)

    def test_transport_model_round_trip(self):
        src = gen_hetero_sim(600, seed=17)
        target = gen_hetero_sim(200, seed=18)
        m = fit_transport(src, target.x, 0.1, seed=3)
        m2 = model_from_dict(json.loads(json.dumps(model_to_dict(m))))
        x_new = np.linspace(-1, 1, 30)[:, None]
        assert np.array_equal(predict_interval(m, x_new).upper,
                              predict_interval(m2, x_new).upper)


def test_interval_batch_validates_order():
    with pytest.raises(ValueError):
        IntervalBatch(np.array([1.0]), np.array([0.0]), np.array([0.5]))
