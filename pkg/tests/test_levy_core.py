import math

import numpy as np
import pytest

from levybranch import levy_core as lc

BROWNIAN = lc.brownian_model(-1.0, 1.0)
CP = lc.compound_poisson_model(1.0, 0.0, 2.0, lc.ExponentialMagnitude(1.0))


class TestPsi:
    def test_brownian_closed_form(self):
        assert lc.psi(BROWNIAN, 2.0) == pytest.approx(0.0, abs=1e-14)
        assert lc.psi(BROWNIAN, 3.0) == pytest.approx(-3.0 + 4.5, abs=1e-14)

    def test_zero_at_zero(self):
        for model in (BROWNIAN, CP, lc.brownian_model(0.3, 0.7)):
            assert lc.psi(model, 0.0) == 0.0

    def test_compound_poisson_closed_form(self):
        # lam - 2*lam/(lam+1), zero at lam = 1
        assert lc.psi(CP, 1.0) == pytest.approx(0.0, abs=1e-14)
        lam = 0.7
        assert lc.psi(CP, lam) == pytest.approx(lam - 2 * lam / (lam + 1), abs=1e-14)

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            lc.psi(BROWNIAN, -0.1)

    def test_strict_convexity_chords(self):
        grid = np.linspace(0.0, 4.0, 41)
        for model in (BROWNIAN, CP):
            vals = lc.psi(model, grid)
            mid = 0.5 * (vals[:-2] + vals[2:])
            assert np.all(vals[1:-1] < mid - 0.0)

    def test_quadrature_agrees_with_closed_form(self):
        for lam in (0.0, 0.5, 1.0, 2.5):
            closed = lc.psi(CP, lam)
            quad = lc.psi(CP, lam, method="quadrature")
            assert quad == pytest.approx(closed, rel=1e-8, abs=1e-10)
        d1c, d2c = lc.psi_derivatives(CP, 0.8)
        d1q, d2q = lc.psi_derivatives(CP, 0.8, method="quadrature")
        assert d1q == pytest.approx(d1c, rel=1e-8)
        assert d2q == pytest.approx(d2c, rel=1e-8)


class TestDerivatives:
    def test_brownian(self):
        assert lc.psi_derivatives(BROWNIAN, 1.0) == pytest.approx((0.0, 1.0))
        assert lc.psi_derivatives(BROWNIAN, 0.0) == pytest.approx((-1.0, 1.0))

    def test_compound_poisson(self):
        d1, d2 = lc.psi_derivatives(CP, 0.0)
        assert d1 == pytest.approx(-1.0, abs=1e-14)
        assert d2 == pytest.approx(4.0, abs=1e-14)

    def test_second_derivative_positive_on_grid(self):
        for model in (BROWNIAN, CP):
            for lam in np.linspace(0, 5, 21):
                assert lc.psi_derivatives(model, lam)[1] > 0


class TestPhi:
    def test_reference_roots(self):
        assert lc.phi(BROWNIAN, 0.0) == pytest.approx(2.0, abs=1e-10)
        assert lc.phi(BROWNIAN, -0.25) == pytest.approx(1.0 + math.sqrt(0.5), abs=1e-10)
        assert lc.phi(BROWNIAN, -0.5) == pytest.approx(1.0, abs=1e-10)

    def test_inverse_property_random_q(self):
        rng = np.random.default_rng(20240817)
        chars = lc.characteristics(BROWNIAN)
        qs = rng.uniform(-chars.q_star, 8.0, size=100)
        for q in qs:
            lam = lc.phi(BROWNIAN, q, chars)
            err = abs(lc.psi(BROWNIAN, lam) - q) / max(1.0, abs(q))
            assert err < 1e-10

    def test_nondecreasing(self):
        chars = lc.characteristics(CP)
        qs = np.linspace(-chars.q_star, 4.0, 60)
        vals = [lc.phi(CP, q, chars) for q in qs]
        assert np.all(np.diff(vals) >= -1e-12)

    def test_domain_error_names_q_star(self):
        chars = lc.characteristics(BROWNIAN)
        with pytest.raises(ValueError, match="q_star"):
            lc.phi(BROWNIAN, -chars.q_star - 1e-3)

    def test_supercritical_domain(self):
        sup = lc.brownian_model(1.0, 1.0)
        assert lc.phi(sup, 0.0) == 0.0
        with pytest.raises(ValueError):
            lc.phi(sup, -0.1)


class TestCharacteristics:
    def test_brownian_reference(self):
        ch = lc.characteristics(BROWNIAN)
        assert ch.psi_prime_at_zero == pytest.approx(-1.0)
        assert ch.lambda_star == pytest.approx(1.0, abs=1e-10)
        assert ch.q_star == pytest.approx(0.5, abs=1e-10)
        assert ch.psi_second_at_star == pytest.approx(1.0, abs=1e-10)
        assert abs(lc.psi_derivatives(BROWNIAN, ch.lambda_star)[0]) < 1e-10

    def test_compound_poisson_reference(self):
        ch = lc.characteristics(CP)
        assert ch.lambda_star == pytest.approx(math.sqrt(2) - 1, abs=1e-9)
        assert ch.q_star == pytest.approx(3 - 2 * math.sqrt(2), abs=1e-10)
        assert ch.q_star > 0

    def test_regimes(self):
        ch = lc.characteristics(BROWNIAN)
        assert ch.regime(0.25) is lc.Regime.DIES_OUT_SUBCRITICAL
        assert ch.regime(0.5) is lc.Regime.DIES_OUT_CRITICAL
        assert ch.regime(0.5 + 1e-12) is lc.Regime.DIES_OUT_CRITICAL
        assert ch.regime(0.7) is lc.Regime.SURVIVES

    def test_upward_drifting_model(self):
        ch = lc.characteristics(lc.brownian_model(1.0, 1.0))
        assert ch.q_star is None
        assert ch.lambda_star is None
        for beta in (0.01, 1.0, 10.0):
            assert ch.regime(beta) is lc.Regime.SURVIVES


class TestModelValidation:
    def test_subordinator_negative_rejected(self):
        with pytest.raises(ValueError, match="creep"):
            lc.LevyModel(drift=-0.5, gaussian=0.0, jumps=None)
        with pytest.raises(ValueError):
            lc.LevyModel(drift=0.0, gaussian=0.0,
                         jumps=lc.CompoundPoisson(1.0, lc.ExponentialMagnitude(1.0)))

    def test_mixture_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            lc.MixtureOfExponentials((0.5, 0.6), (1.0, 2.0))
        law = lc.MixtureOfExponentials((0.25, 0.75), (0.5, 2.0))
        assert law.mean_magnitude() == pytest.approx(0.25 * 0.5 + 0.75 * 2.0)

    def test_positive_parameters_required(self):
        with pytest.raises(ValueError):
            lc.ExponentialMagnitude(0.0)
        with pytest.raises(ValueError):
            lc.FixedMagnitude(-1.0)
        with pytest.raises(ValueError):
            lc.CompoundPoisson(0.0, lc.ExponentialMagnitude(1.0))

    def test_gaussian_nonnegative(self):
        with pytest.raises(ValueError):
            lc.LevyModel(drift=1.0, gaussian=-0.1)


class TestTruncatedStable:
    def test_finite_activity_and_psi(self):
        model = lc.truncated_stable_model(0.5, 0.4, activity=0.3, alpha=1.2,
                                          tempering=1.0, cutoff=0.05)
        part = model.jumps
        assert math.isfinite(part.total_rate())
        assert lc.psi(model, 0.0) == pytest.approx(0.0, abs=1e-12)
        val = lc.psi(model, 1.5)
        assert math.isfinite(val)
        d1, d2 = lc.psi_derivatives(model, 1.0)
        assert d2 > 0

    def test_small_jump_correction_increases_gaussian(self):
        base = lc.truncated_stable_model(0.5, 0.4, activity=0.3, alpha=1.2,
                                         tempering=1.0, cutoff=0.05)
        corrected = lc.truncated_stable_model(0.5, 0.4, activity=0.3, alpha=1.2,
                                              tempering=1.0, cutoff=0.05,
                                              small_jump_correction=True)
        extra = corrected.gaussian ** 2 - base.gaussian ** 2
        assert extra == pytest.approx(base.jumps.small_jump_variance(), rel=1e-10)
        assert extra > 0

    def test_cutoff_must_be_positive(self):
        with pytest.raises(ValueError):
            lc.TruncatedStableLike(activity=1.0, alpha=0.8, cutoff=0.0)

    def test_sampling_respects_cutoff(self):
        part = lc.TruncatedStableLike(activity=0.3, alpha=1.2, tempering=0.5,
                                      cutoff=0.05)
        rng = np.random.default_rng(5)
        draws = part.sample(rng, 2000)
        assert np.all(draws > part.cutoff)
        # crude mean check against quadrature
        g0, g1, _ = part.weighted_integrals(0.0)
        assert draws.mean() == pytest.approx(g1 / g0, rel=0.1)


def test_model_hash_stable_and_distinct():
    assert lc.model_hash(BROWNIAN) == lc.model_hash(lc.brownian_model(-1.0, 1.0))
    assert lc.model_hash(BROWNIAN) != lc.model_hash(CP)
    assert len(lc.model_hash(CP)) == 12
