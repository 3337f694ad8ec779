import math

import numpy as np
import pytest

from levybranch import _rng
from levybranch import branching_sim as bs
from levybranch import levy_core as lc
from levybranch import scale_fn as sf
from levybranch import tilt
from levybranch.errors import InputError

BROWNIAN = lc.brownian_model(-1.0, 1.0)
CP = lc.compound_poisson_model(1.0, 0.0, 2.0, lc.ExponentialMagnitude(1.0))


class TestMakeTilted:
    def test_largest_root_selected(self):
        tm = tilt.make_tilted(BROWNIAN, -0.25)
        assert tm.phi_c == pytest.approx(1.0 + math.sqrt(0.5), abs=1e-10)
        assert tm.model.drift == pytest.approx(math.sqrt(0.5), abs=1e-10)
        d1, _ = lc.psi_derivatives(tm.model, 0.0)
        assert d1 >= 0

    def test_critical_tilt_oscillates(self):
        tm = tilt.make_tilted(BROWNIAN, -0.5)
        assert tm.model.drift == pytest.approx(0.0, abs=1e-10)

    def test_zero_tilt_identity_for_upward_model(self):
        sup = lc.brownian_model(1.0, 1.0)
        tm = tilt.make_tilted(sup, 0.0)
        assert tm.phi_c == 0.0
        assert tm.model == sup

    def test_below_domain_rejected(self):
        with pytest.raises(ValueError):
            tilt.make_tilted(BROWNIAN, -0.51)

    def test_exponential_law_parameter_map(self):
        tm = tilt.make_tilted(CP, -0.1)
        phic = tm.phi_c
        law = tm.model.jumps.law
        assert law.mean == pytest.approx(1.0 / (1.0 + phic), rel=1e-12)
        assert tm.model.jumps.rate == pytest.approx(2.0 / (1.0 + phic), rel=1e-12)

    @pytest.mark.parametrize("model", [
        BROWNIAN, CP,
        lc.compound_poisson_model(0.5, 0.7, 1.0, lc.FixedMagnitude(0.8)),
        lc.compound_poisson_model(0.5, 0.6, 1.5,
                                  lc.MixtureOfExponentials((0.3, 0.7), (0.4, 1.2))),
        lc.truncated_stable_model(0.2, 0.6, activity=0.4, alpha=1.1,
                                  tempering=1.5, cutoff=0.05),
    ])
    def test_exponent_identity_random_levels(self, model):
        rng = np.random.default_rng(11)
        chars = lc.characteristics(model)
        lo = -chars.q_star if chars.q_star is not None else 0.0
        for c in rng.uniform(lo, 1.0, size=10):
            tm = tilt.make_tilted(model, float(c))
            lams = np.linspace(0.0, 3.0, 50)
            worst = max(abs(lc.psi(tm.model, lam)
                            - (lc.psi(model, lam + tm.phi_c) - c)) for lam in lams)
            assert worst < 1e-10 * max(1.0, abs(c), tm.phi_c)
            assert abs(lc.psi(tm.model, 0.0)) < 1e-10


class TestEsscherMeasureChange:
    def test_bounded_functionals_agree(self):
        rep = tilt.esscher_check(BROWNIAN, -0.25, 1.0, 2.0, 40_000, 303)
        assert rep["max_abs_z"] < 3.5

    def test_jump_model(self):
        rep = tilt.esscher_check(CP, -0.1, 1.0, 1.5, 40_000, 304)
        assert rep["max_abs_z"] < 3.5

    def test_positive_tilt(self):
        rep = tilt.esscher_check(BROWNIAN, 0.3, 1.0, 1.0, 40_000, 305)
        assert rep["max_abs_z"] < 3.5


class TestConditionedSampler:
    def test_normalisation_at_every_horizon(self):
        sampler = tilt.make_conditioned_sampler(BROWNIAN, 0.25, dt=0.01)
        for i, horizon in enumerate((1.0, 3.0, 8.0)):
            rng = _rng.generator(_rng.stream_key(5, "norm", i))
            w = np.array([tilt.sample_conditioned(sampler, 1.0, horizon, rng).weight
                          for _ in range(15_000)])
            z = (w.mean() - 1.0) / (w.std(ddof=1) / math.sqrt(len(w)))
            assert abs(z) < 3.5

    def test_infimum_event_matches_scale_ratio(self):
        # P^{up}_x(inf L > x - a) = W_c^(0)(a) / W_c^(0)(x); measured with a
        # bridge-corrected barrier at the threshold (an endpoint-only running
        # minimum would overshoot, which is the documented extreme-recording
        # bias)
        beta, x, thr = 0.25, 2.0, 1.2
        tm = tilt.make_tilted(BROWNIAN, -beta)
        h = lambda v: sf.tilted_w_zero(BROWNIAN, -beta, v)
        rng = _rng.generator(_rng.stream_key(7, "inf-event"))
        horizon = 14.0
        vals = np.zeros(20_000)
        for i in range(len(vals)):
            side, _, end = bs.first_passage(tm.model, x, horizon, 0.01, rng,
                                            lower=thr)
            if side == "none":
                vals[i] = float(h(np.array([end]))[0] / h(np.array([x]))[0])
        est = vals.mean()
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        target = float(h(np.array([x - thr]))[0] / h(np.array([x]))[0])
        assert abs(est - target) < 3.5 * se

    def test_exponential_functional_integrable(self):
        # E^{up}[e^{-phi(-beta) L_T}] stays finite and small, consistent with
        # integrability of e^{-phi(-beta) x} against the tilted scale function
        beta = 0.25
        phi_nb = lc.phi(BROWNIAN, -beta)
        sampler = tilt.make_conditioned_sampler(BROWNIAN, beta, dt=0.01)
        rng = _rng.generator(_rng.stream_key(9, "exp-functional"))
        vals = []
        for _ in range(5000):
            s = tilt.sample_conditioned(sampler, 1.0, 10.0, rng)
            vals.append(s.weight * math.exp(-phi_nb * s.end) if s.survived else 0.0)
        mean = float(np.mean(vals))
        assert 0.0 < mean < 1.0
        # quadrature of the display it feeds: finite integral
        xs = np.linspace(0.0, 60.0, 4000)
        integrand = np.exp(-phi_nb * xs) * sf.tilted_w_zero(BROWNIAN, -beta, xs)
        assert np.trapz(integrand, xs) < np.inf

    def test_requires_positive_start(self):
        sampler = tilt.make_conditioned_sampler(BROWNIAN, 0.25)
        with pytest.raises(InputError):
            tilt.sample_conditioned(sampler, 0.0, 1.0, _rng.generator((1, 2)))


class TestKendallIdentity:
    def test_two_sample_cells_on_tilted_model(self):
        tm = tilt.make_tilted(BROWNIAN, -0.25)
        cells = [(0.5, 1.0), (1.0, 1.5), (1.5, 2.0), (2.0, 2.5)]
        rep = tilt.kendall_check(tm.model, 1.0, cells, 30_000, 0.005, 99)
        assert rep["max_abs_z"] < 3.5

    def test_downward_drifting_model_rejected(self):
        with pytest.raises(InputError):
            tilt.kendall_check(BROWNIAN, 1.0, [(0.5, 1.0)], 100, 0.01, 1)


class TestKappa:
    @pytest.fixture(scope="class")
    def m_curve(self):
        return bs.free_max_tail(BROWNIAN, 0.25, np.arange(0.0, 8.25, 0.25),
                                30_000, horizon=30.0, dt=0.02, seed=404)

    def test_positive_with_sane_scale(self, m_curve):
        est = tilt.estimate_kappa(BROWNIAN, 0.25, m_curve, mc_size=4000,
                                  seed=405, dt=0.01)
        assert est.kappa > 0
        assert est.ci_lo < est.kappa < est.ci_hi
        assert 0.1 < est.kappa < 2.0
        assert est.truncation_bound < 1e-3 * est.raw_expectation
        assert est.phi_neg_beta == pytest.approx(1 + math.sqrt(0.5), abs=1e-9)
        d = est.to_dict()
        assert {"beta", "phi_neg_beta", "kappa", "ci_lo", "ci_hi", "mc_size",
                "truncation_horizon"} <= set(d)

    def test_insufficient_coverage_names_requirement(self):
        short = bs.free_max_tail(BROWNIAN, 0.25, np.arange(0.0, 2.1, 0.25),
                                 2000, horizon=20.0, dt=0.02, seed=406)
        with pytest.raises(InputError, match="x_hi"):
            tilt.estimate_kappa(BROWNIAN, 0.25, short, mc_size=100, seed=1)

    def test_critical_rate_out_of_scope(self, m_curve):
        with pytest.raises(InputError, match="subcritical"):
            tilt.estimate_kappa(BROWNIAN, 0.5, m_curve, mc_size=100, seed=1)
