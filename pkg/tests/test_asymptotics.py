import math

import numpy as np
import pytest

from levybranch import asymptotics as asym
from levybranch import branching_sim as bs
from levybranch import levy_core as lc
from levybranch.errors import InputError

BROWNIAN = lc.brownian_model(-1.0, 1.0)


def _tail(thresholds, probs, n):
    thresholds = np.asarray(thresholds, dtype=float)
    probs = np.asarray(probs, dtype=float)
    counts = np.round(probs * n).astype(int)
    ci = np.array([bs.wilson_interval(int(k), n) for k in counts])
    return bs.TailEstimate(thresholds, probs, ci[:, 0], ci[:, 1], n, counts)


class TestFitRate:
    def test_noiseless_exponential(self):
        t = np.arange(2.0, 12.1, 1.0)
        fit = asym.fit_rate(_tail(t, np.exp(-0.25 * t), 10 ** 7))
        assert fit.slope == pytest.approx(-0.25, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.log_correction is None

    def test_noiseless_with_log_correction(self):
        x = np.arange(2.0, 9.1, 0.5)
        fit = asym.fit_rate(_tail(x, np.exp(-x) / x, 10 ** 8),
                            with_log_correction=True)
        assert fit.slope == pytest.approx(-1.0, abs=1e-9)
        assert fit.log_correction == pytest.approx(-1.0, abs=1e-9)

    def test_pinned_log_coefficient(self):
        x = np.arange(2.0, 9.1, 0.5)
        fit = asym.fit_rate(_tail(x, np.exp(-x) / x, 10 ** 8),
                            with_log_correction=True, pin_log_coefficient=-1.0)
        assert fit.slope == pytest.approx(-1.0, abs=1e-10)
        assert fit.log_correction == -1.0
        assert fit.se_log == 0.0

    def test_bootstrap_coverage(self):
        # resampled binomial noise around an exact exponential: the 95%
        # slope interval should cover the truth in at least 90 of 100 draws
        rng = np.random.default_rng(321)
        t = np.arange(2.0, 12.1, 1.0)
        p = np.exp(-0.25 * t)
        n = 100_000
        covered = 0
        for _ in range(100):
            counts = rng.binomial(n, p)
            probs = counts / n
            ci = np.array([bs.wilson_interval(int(k), n) for k in counts])
            tail = bs.TailEstimate(t, probs, ci[:, 0], ci[:, 1], n, counts)
            fit = asym.fit_rate(tail)
            if abs(fit.slope + 0.25) <= 1.959963984540054 * fit.se_slope:
                covered += 1
        assert covered >= 90

    def test_too_few_points_rejected(self):
        t = np.arange(1.0, 5.1, 1.0)
        with pytest.raises(InputError, match="usable"):
            asym.fit_rate(_tail(t, np.exp(-t), 10 ** 6))

    def test_window_and_survivor_cuts(self):
        t = np.arange(1.0, 20.1, 1.0)
        p = np.exp(-0.5 * t)
        fit = asym.fit_rate(_tail(t, p, 10 ** 5))
        # the 50-survivor rule cuts around t ~ 15
        assert fit.window[1] <= 16.0
        fit2 = asym.fit_rate(_tail(t, p, 10 ** 5), window=(2.0, 9.0))
        assert fit2.window == (2.0, 9.0)


class TestVerifyTheorem1:
    def test_subcritical_small_run(self):
        v = asym.verify_theorem1(BROWNIAN, 0.25, 1.0, 40_000, 7070,
                                 window=(4.0, 12.0),
                                 thresholds=np.arange(4.0, 12.1, 1.0),
                                 dt=0.02, single_particle=True)
        assert v["check"] == "theorem1"
        assert v["target"] == pytest.approx(-0.25)
        assert abs(v["estimate"] - v["target"]) < max(2.5 * v["se"], 0.05)
        keys = {"check", "model_hash", "params", "target", "estimate", "se",
                "window", "n", "verdict", "detail"}
        assert keys <= set(v)
        sp = v["detail"]["single_particle"]
        assert "fit" in sp and sp["target"] == pytest.approx(-0.5)

    def test_supercritical_rejected(self):
        with pytest.raises(InputError):
            asym.verify_theorem1(lc.brownian_model(1.0, 1.0), 0.25, 1.0, 10, 1)

    def test_beta_above_q_star_rejected(self):
        with pytest.raises(InputError):
            asym.verify_theorem1(BROWNIAN, 0.8, 1.0, 10, 1)


class TestVerifyTheorem2:
    def test_subcritical_single_start(self):
        v = asym.verify_theorem2(BROWNIAN, 0.25, [1.0], 40_000, 8080,
                                 dt=0.02, horizon=25.0)
        assert v["target"] == pytest.approx(-(1 + math.sqrt(0.5)), abs=1e-10)
        assert abs(v["estimate"] - v["target"]) < max(2.5 * v["se"],
                                                      0.05 * abs(v["target"]))

    def test_rate_monotonicity_in_beta(self):
        # larger branching rate means slower extinction decay (slope closer
        # to zero), on matched seeds
        slopes = {}
        for beta in (0.1, 0.3):
            v = asym.verify_theorem1(BROWNIAN, beta, 1.0, 30_000, 4242,
                                     window=(3.0, 10.0),
                                     thresholds=np.arange(3.0, 10.1, 0.5),
                                     dt=0.02, single_particle=False)
            slopes[beta] = v["estimate"]
        assert slopes[0.1] < slopes[0.3] < 0.0


class TestVerifyExitRate:
    def test_reference_level_pi(self):
        v = asym.verify_exit_rate(BROWNIAN, 1.0, math.pi, 25_000, 1111, dt=0.01)
        assert v["target"] == pytest.approx(-1.0, abs=1e-6)
        assert abs(v["estimate"] - v["target"]) < max(2.5 * v["se"], 0.05)

    def test_requires_gaussian_part(self):
        cp = lc.compound_poisson_model(1.0, 0.0, 2.0, lc.ExponentialMagnitude(1.0))
        with pytest.raises(InputError, match="eta"):
            asym.verify_exit_rate(cp, 1.0, 3.0, 10, 1)
