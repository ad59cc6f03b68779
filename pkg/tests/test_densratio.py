"""Classifier-backed density-ratio estimation."""

import numpy as np
import pytest
from scipy import stats

from piagg.dataset import DataTable, tilt_resample
from piagg.densratio import DensityRatioModel, eval_ratio, fit_density_ratio
from piagg.errors import DimensionMismatch
from piagg.numerics import LinearModel


def _model_with_coefficients(coefs, n_source=1, n_target=1,
                             prob_clip=1e-6, ratio_cap=1e3):
    clf = LinearModel(np.asarray(coefs, float), "logistic")
    return DensityRatioModel(clf, n_source, n_target, prob_clip, ratio_cap)


class TestFit:
    def test_equal_distributions_ratio_near_one(self):
        rng = np.random.default_rng(0)
        src = rng.normal(size=(5000, 1))
        tgt = rng.normal(size=(5000, 1))
        m = fit_density_ratio(src, tgt)
        assert 0.9 <= float(eval_ratio(m, src).mean()) <= 1.1

    def test_gaussian_mean_shift_log_odds(self):
        # true log-odds of N(1,1) against N(0,1) is x - 1/2
        rng = np.random.default_rng(1)
        src = rng.normal(0, 1, size=(20000, 1))
        tgt = rng.normal(1, 1, size=(20000, 1))
        m = fit_density_ratio(src, tgt)
        assert m.classifier.coefficients[1] == pytest.approx(1.0, abs=0.1)

    def test_tilted_resample_recovers_ranking(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(3000, 5))
        beta = np.array([-1.0, 0.0, 0.0, 0.0, 1.0])
        target = tilt_resample(DataTable(x), beta, 3000, seed=5)
        m = fit_density_ratio(x, target.x)
        w = eval_ratio(m, x)
        corr = stats.spearmanr(w, np.exp(x @ beta)).statistic
        assert corr >= 0.9


class TestEval:
    def test_chance_classifier_gives_unit_ratio(self):
        m = _model_with_coefficients([0.0, 0.0], n_source=10, n_target=10)
        assert np.allclose(eval_ratio(m, np.linspace(-3, 3, 7)[:, None]), 1.0)

    def test_cap_engages_at_extreme_probability(self):
        m = _model_with_coefficients([0.0, 100.0], n_source=10, n_target=10)
        w = eval_ratio(m, np.array([[50.0]]))
        assert w[0] == 1e3  # (1-clip)/clip would be 1e6, the cap wins

    def test_hand_formula(self):
        # log-odds 0.4 with n1/n2 = 2 gives 2 * exp(0.4)
        m = _model_with_coefficients([0.4, 0.0], n_source=20, n_target=10)
        w = eval_ratio(m, np.zeros((1, 1)))
        assert w[0] == pytest.approx(2.0 * np.exp(0.4), rel=1e-9)

    def test_dimension_mismatch(self):
        m = _model_with_coefficients([0.0, 1.0])
        with pytest.raises(DimensionMismatch):
            eval_ratio(m, np.zeros((3, 2)))


class TestInvariants:
    def test_outputs_bounded_by_cap(self):
        rng = np.random.default_rng(3)
        m = _model_with_coefficients([0.5, 2.0, -1.0], n_source=100, n_target=50,
                                     ratio_cap=25.0)
        w = eval_ratio(m, rng.normal(size=(500, 2)) * 10)
        assert np.all(w >= 0) and np.all(w <= 25.0)

    def test_monotone_in_score(self):
        m = _model_with_coefficients([0.0, 1.0])
        x = np.linspace(-40, 40, 401)[:, None]
        w = eval_ratio(m, x)
        assert np.all(np.diff(w) >= 0)

    def test_self_normalization_improves_with_n(self):
        rng = np.random.default_rng(4)
        errs = {}
        for n in (1000, 10000):
            src = rng.normal(size=(n, 1))
            tgt = rng.normal(size=(n, 1))
            m = fit_density_ratio(src, tgt)
            fresh = rng.normal(size=(n, 1))
            errs[n] = abs(float(eval_ratio(m, fresh).mean()) - 1.0)
        assert errs[1000] <= 0.15
        assert errs[10000] <= 0.02
