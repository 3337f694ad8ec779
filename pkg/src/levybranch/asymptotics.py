"""Fitted decay rates from Monte Carlo tails, compared to predicted exponents.

Survival curves are fitted by weighted least squares on log probabilities,
with inverse delta-method variances as weights.  Optional toggled regressors
serve the known prefactor shapes: a log-threshold term captures t^(-3/2)
polynomial corrections of single-particle and subcritical extinction tails,
and the 1/x factor of the critical maximum tail.

Every verdict carries the analytic target, the estimate, its standard error,
the fit window and the replicate count, so the JSON report alone is
machine-checkable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _rng
from .branching_sim import (BranchingConfig, ReplicateBatch, TailEstimate,
                            extinction_tail, first_passage, free_max_tail,
                            max_tail, run_replicates, _tail_from_values)
from .errors import InputError
from .levy_core import LevyModel, Regime, characteristics, model_hash, phi
from .scale_fn import rho, scale_value

__all__ = [
    "RateFit",
    "fit_rate",
    "verify_theorem1",
    "verify_theorem2",
    "verify_corollary",
    "verify_exit_rate",
]


@dataclass
class RateFit:
    """Weighted least-squares fit of log survival probabilities."""

    window: tuple
    slope: float
    intercept: float
    log_correction: Optional[float]
    se_slope: float
    se_intercept: float
    se_log: Optional[float]
    r_squared: float
    n_points: int
    n_replicates: int

    def predict_log(self, t):
        t = np.asarray(t, dtype=float)
        out = self.intercept + self.slope * t
        if self.log_correction is not None:
            out = out + self.log_correction * np.log(t)
        return out

    def to_dict(self) -> dict:
        return {
            "window": list(self.window), "slope": self.slope,
            "intercept": self.intercept, "log_correction": self.log_correction,
            "se_slope": self.se_slope, "se_intercept": self.se_intercept,
            "se_log": self.se_log, "r_squared": self.r_squared,
            "n_points": self.n_points, "n_replicates": self.n_replicates,
        }


def fit_rate(tail: TailEstimate, with_log_correction: bool = False,
             window: Optional[tuple] = None, min_survivors: int = 50,
             max_ci_ratio: float = 0.5,
             pin_log_coefficient: Optional[float] = None) -> RateFit:
    """Fit log p = c0 + c1 * t (+ c2 * log t) by weighted least squares.

    Usable thresholds have 0 < p < 1, at least ``min_survivors`` surviving
    replicates, and a confidence half-width below ``max_ci_ratio`` of the
    point estimate; fewer than six usable points is an input error.

    With ``pin_log_coefficient`` the log regressor enters as a fixed offset
    instead of a free coefficient.  Pin it when theory dictates the
    polynomial prefactor: over desk-scale windows the free joint fit is
    strongly collinear and finite-threshold transients alias into the rate.
    """
    t = np.asarray(tail.thresholds, dtype=float)
    p = np.asarray(tail.survival_prob, dtype=float)
    k = np.asarray(tail.counts, dtype=float)
    half = 0.5 * (np.asarray(tail.ci_hi) - np.asarray(tail.ci_lo))
    usable = (p > 0) & (p < 1) & (k >= min_survivors)
    with np.errstate(invalid="ignore", divide="ignore"):
        usable &= half <= max_ci_ratio * p
    if with_log_correction or pin_log_coefficient is not None:
        usable &= t > 0
    if window is not None:
        usable &= (t >= window[0]) & (t <= window[1])
    if int(usable.sum()) < 6:
        raise InputError(f"only {int(usable.sum())} usable thresholds; need >= 6")
    t, p = t[usable], p[usable]
    n = tail.n_replicates
    var = (1.0 - p) / (n * p)  # delta-method variance of log p
    w = 1.0 / var
    y = np.log(p)
    if pin_log_coefficient is not None:
        y = y - pin_log_coefficient * np.log(t)
    cols = [np.ones_like(t), t]
    if with_log_correction and pin_log_coefficient is None:
        cols.append(np.log(t))
    x = np.column_stack(cols)
    a = x.T @ (w[:, None] * x)
    b = x.T @ (w * y)
    coef = np.linalg.solve(a, b)
    cov = np.linalg.inv(a)
    resid = y - x @ coef
    ss_res = float(np.sum(w * resid ** 2))
    ybar = float(np.sum(w * y) / np.sum(w))
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    se = np.sqrt(np.diag(cov))
    if pin_log_coefficient is not None:
        log_c, se_log = float(pin_log_coefficient), 0.0
    elif with_log_correction:
        log_c, se_log = float(coef[2]), float(se[2])
    else:
        log_c, se_log = None, None
    return RateFit(
        window=(float(t[0]), float(t[-1])),
        slope=float(coef[1]), intercept=float(coef[0]),
        log_correction=log_c,
        se_slope=float(se[1]), se_intercept=float(se[0]),
        se_log=se_log,
        r_squared=r2, n_points=len(t), n_replicates=n)


# ---------------------------------------------------------------------------
# Verdict plumbing
# ---------------------------------------------------------------------------


def _verdict(check: str, model: LevyModel, params: dict, target, estimate,
             se, window, n: int, passed: bool, detail: Optional[dict] = None) -> dict:
    return {
        "check": check,
        "model_hash": model_hash(model),
        "params": params,
        "target": target,
        "estimate": estimate,
        "se": se,
        "window": list(window) if window is not None else None,
        "n": n,
        "verdict": "PASS" if passed else "FAIL",
        "detail": detail or {},
    }


def _slope_pass(slope: float, se: float, target: float, rel: float = 0.05) -> bool:
    return abs(slope - target) < max(2.0 * se, rel * abs(target))


def _single_particle_tail(model: LevyModel, a: float, thresholds, n: int,
                          dt: float, seed: int, horizon: float) -> TailEstimate:
    rng = _rng.generator(_rng.stream_key(seed, "single-particle-tail"))
    times = np.empty(n)
    for i in range(n):
        side, t_hit, _ = first_passage(model, a, horizon, dt, rng)
        times[i] = t_hit if side == "lower" else math.inf
    return _tail_from_values(times, thresholds, n, "extinction", strict=True)


# ---------------------------------------------------------------------------
# Verification drivers
# ---------------------------------------------------------------------------


def verify_theorem1(model: LevyModel, beta: float, a: float, n_replicates: int,
                    seed: int, window: tuple = (4.0, 14.0),
                    thresholds: Optional[Sequence[float]] = None,
                    dt: float = 0.02, horizon: Optional[float] = None,
                    jobs: int = 1, single_particle: bool = True,
                    batch: Optional[ReplicateBatch] = None) -> dict:
    """Extinction-rate check: the fitted decay of log P_a(zeta > t) should
    match beta - q_star.

    Subcritical fits include the log-time regressor (the extinction tail
    carries a t^(-3/2) prefactor, as the single-particle passage law does);
    at criticality the bare rate is fitted and flagged, since convergence to
    the limit rate is known to be very slow there.
    """
    chars = characteristics(model)
    regime = chars.regime(beta)
    if regime is Regime.SURVIVES:
        raise InputError("extinction-rate check needs psi'(0+) < 0 and beta <= q_star")
    critical = regime is Regime.DIES_OUT_CRITICAL
    target = beta - chars.q_star
    if thresholds is None:
        thresholds = np.arange(window[0], window[1] + 1e-9, 1.0)
    if horizon is None:
        horizon = float(max(thresholds)) * 1.5 + 2.0
    if batch is None:
        cfg = BranchingConfig(model=model, beta=beta, start=a, horizon=horizon,
                              dt=dt, seed=seed)
        batch = run_replicates(cfg, n_replicates, jobs=jobs)
    tail = extinction_tail(batch, thresholds)
    if critical:
        fit = fit_rate(tail, window=window)
        passed = abs(fit.slope) < 0.03
        caveat = ("critical-case rate convergence is very slow; the bare-rate "
                  "fit over a desk-scale window sits well below the limit rate 0")
    else:
        # the extinction tail carries the same t^(-3/2) prefactor as the
        # single-particle passage law; pin it rather than co-fitting it
        fit = fit_rate(tail, with_log_correction=True, window=window,
                       pin_log_coefficient=-1.5)
        passed = _slope_pass(fit.slope, fit.se_slope, target)
        caveat = None

    detail = {"fit": fit.to_dict(), "regime": regime.value,
              "q_star": chars.q_star}
    if caveat:
        detail["caveat"] = caveat
    if single_particle:
        sp_n = min(n_replicates, 100_000)
        # the single particle dies at rate q_star, about twice the branching
        # tail's rate, so it gets a shorter threshold grid of its own
        sp_thresholds = np.arange(1.5, 8.0 + 1e-9, 0.5)
        sp_tail = _single_particle_tail(model, a, sp_thresholds, sp_n, dt,
                                        seed + 1, horizon)
        try:
            sp_fit = fit_rate(sp_tail, with_log_correction=True,
                              pin_log_coefficient=-1.5)
            detail["single_particle"] = {
                "target": -chars.q_star, "fit": sp_fit.to_dict(),
                "within_tolerance": _slope_pass(sp_fit.slope, sp_fit.se_slope,
                                                -chars.q_star),
            }
        except InputError as exc:
            detail["single_particle"] = {"skipped": str(exc)}
    return _verdict("theorem1", model,
                    {"beta": beta, "a": a, "dt": dt}, target,
                    fit.slope, fit.se_slope, fit.window, tail.n_replicates,
                    passed, detail)


def verify_theorem2(model: LevyModel, beta: float, a_values: Sequence[float],
                    n_replicates: int, seed: int,
                    thresholds: Optional[Sequence[float]] = None,
                    dt: float = 0.02, horizon: float = 30.0, jobs: int = 1,
                    batches: Optional[dict] = None) -> dict:
    """Maximum-tail check.

    Subcritical: the fitted slope of log P_a(M >= x) should match -phi(-beta)
    for every start a, the slopes must agree pairwise, and the fitted
    prefactor ratios should match the scale-function ratios W^(-beta)(a)/
    W^(-beta)(a').  Critical: a joint fit with the log-threshold regressor
    should recover the exponential coefficient -phi(-q_star) and a
    log-correction coefficient near -1.
    """
    chars = characteristics(model)
    regime = chars.regime(beta)
    if regime is Regime.SURVIVES:
        raise InputError("maximum-tail check needs psi'(0+) < 0 and beta <= q_star")
    critical = regime is Regime.DIES_OUT_CRITICAL
    phi_nb = phi(model, -beta, chars)
    target = -phi_nb
    a_values = list(a_values)

    fits = {}
    per_a = {}
    for idx, a in enumerate(a_values):
        if batches is not None and a in batches:
            batch = batches[a]
        else:
            cfg = BranchingConfig(model=model, beta=beta, start=a,
                                  horizon=horizon, dt=dt,
                                  seed=seed + 1000 * idx)
            batch = run_replicates(cfg, n_replicates, jobs=jobs)
        if thresholds is None:
            thr = np.arange(a + 1.0, a + 8.0 + 1e-9, 0.5)
        else:
            thr = np.asarray(thresholds, dtype=float)
        tail = max_tail(batch, thr)
        fit = fit_rate(tail, with_log_correction=critical)
        fits[a] = fit
        per_a[str(a)] = fit.to_dict()

    a0 = a_values[0]
    main = fits[a0]
    detail = {"per_start": per_a, "regime": regime.value, "phi_neg_beta": phi_nb}

    if critical:
        passed = (abs(main.slope - target) < 0.05 * abs(target)
                  and -1.5 <= main.log_correction <= -0.5)
        detail["log_correction_window"] = [-1.5, -0.5]
        return _verdict("theorem2", model,
                        {"beta": beta, "a_values": a_values, "dt": dt},
                        target, main.slope, main.se_slope, main.window,
                        main.n_replicates, passed, detail)

    passed = _slope_pass(main.slope, main.se_slope, target)
    pairwise = []
    for i, ai in enumerate(a_values):
        for aj in a_values[i + 1:]:
            fi, fj = fits[ai], fits[aj]
            gap = abs(fi.slope - fj.slope)
            lim = 2.0 * math.hypot(fi.se_slope, fj.se_slope)
            pairwise.append({"pair": [ai, aj], "gap": gap, "limit": lim,
                             "consistent": bool(gap <= lim)})
            if gap > lim:
                passed = False
    detail["pairwise_slopes"] = pairwise

    if len(a_values) >= 2:
        ratios = []
        for aj in a_values[1:]:
            fi, fj = fits[a0], fits[aj]
            est = math.exp(fi.intercept - fj.intercept)
            tgt = (scale_value(model, -beta, a0) / scale_value(model, -beta, aj))
            se = est * math.hypot(fi.se_intercept, fj.se_intercept)
            z = (est - tgt) / se if se > 0 else 0.0
            ratios.append({"pair": [a0, aj], "estimate": est, "target": tgt,
                           "z": z, "consistent": bool(abs(z) <= 3.0)})
            if abs(z) > 3.0:
                passed = False
        detail["prefactor_ratios"] = ratios
    return _verdict("theorem2", model,
                    {"beta": beta, "a_values": a_values, "dt": dt},
                    target, main.slope, main.se_slope, main.window,
                    main.n_replicates, passed, detail)


def verify_corollary(model: LevyModel, beta: float, n_replicates: int,
                     seed: int, thresholds: Optional[Sequence[float]] = None,
                     dt: float = 0.02, horizon: float = 30.0,
                     depth: Optional[float] = None, jobs: int = 1,
                     tail: Optional[TailEstimate] = None,
                     shift_check: bool = True) -> dict:
    """Free-maximum check: slope of log P_0(M >= x) against -phi(-beta),
    the pointwise exponential bound P_0(M >= x) <= e^{-phi(-beta) x}, and
    translation invariance of the slope under a shifted start."""
    chars = characteristics(model)
    if chars.regime(beta) is Regime.SURVIVES:
        raise InputError("free-maximum check needs psi'(0+) < 0 and beta <= q_star")
    phi_nb = phi(model, -beta, chars)
    target = -phi_nb
    if thresholds is None:
        thresholds = np.arange(0.5, 8.0 + 1e-9, 0.5)
    if tail is None:
        tail = free_max_tail(model, beta, thresholds, n_replicates, horizon,
                             dt, seed, depth=depth, jobs=jobs)
    fit = fit_rate(tail, with_log_correction=False)
    passed = _slope_pass(fit.slope, fit.se_slope, target)

    bound_rows = []
    for i, x in enumerate(tail.thresholds):
        bound = math.exp(-phi_nb * x)
        se = max((tail.ci_hi[i] - tail.survival_prob[i]) / 1.959963984540054, 1e-12)
        ok = tail.survival_prob[i] <= bound + 3.0 * se
        bound_rows.append({"x": float(x), "estimate": float(tail.survival_prob[i]),
                           "bound": bound, "respected": bool(ok)})
        if not ok:
            passed = False
    detail = {"fit": fit.to_dict(), "phi_neg_beta": phi_nb,
              "exponential_bound": bound_rows}

    if shift_check:
        # translation invariance: the same tail measured from a start moved
        # up by 1; a shorter grid keeps enough survivors at quarter size
        shift_grid = np.arange(0.5, 4.5 + 1e-9, 0.5) + 1.0
        shifted = free_max_tail(model, beta, shift_grid,
                                max(n_replicates // 4, 5000), horizon, dt,
                                seed + 17, depth=depth, jobs=jobs)
        shifted.thresholds = shifted.thresholds - 1.0
        try:
            fit_s = fit_rate(shifted, with_log_correction=False)
            gap = abs(fit_s.slope - fit.slope)
            lim = 2.0 * math.hypot(fit.se_slope, fit_s.se_slope)
            detail["shifted_start"] = {"slope": fit_s.slope, "se": fit_s.se_slope,
                                       "gap": gap, "limit": lim,
                                       "consistent": bool(gap <= lim)}
            if gap > lim:
                passed = False
        except InputError as exc:
            detail["shifted_start"] = {"skipped": str(exc)}
    return _verdict("corollary", model, {"beta": beta, "dt": dt}, target,
                    fit.slope, fit.se_slope, fit.window, tail.n_replicates,
                    passed, detail)


def verify_exit_rate(model: LevyModel, a: float, x: float, n_replicates: int,
                     seed: int, thresholds: Optional[Sequence[float]] = None,
                     dt: float = 0.01) -> dict:
    """Two-sided exit-time tail: log P_a(tau_0 and tau_x both > t) decays at
    rate rho(x).  Needs eta > 0: with a pure-jump-plus-drift model the
    one-dimensional laws are not absolutely continuous and the exit-rate
    asymptotic is not guaranteed."""
    if model.gaussian <= 0:
        raise InputError("exit-rate check requires eta > 0")
    if not 0 < a < x:
        raise InputError("need 0 < a < x")
    rv = rho(model, x)
    target = -rv.rho
    if thresholds is None:
        # skip the burn-in where the second exit eigenmode still contributes;
        # for the Brownian corridor the mode spacing scales like pi^2/x^2
        burn_in = max(2.0, 2.0 * x * x / math.pi ** 2)
        thresholds = burn_in + np.arange(0.0, 6.0 + 1e-9, 0.5)
    horizon = float(max(thresholds)) * 1.5 + 1.0
    rng = _rng.generator(_rng.stream_key(seed, "exit-rate"))
    times = np.empty(n_replicates)
    for i in range(n_replicates):
        side, t_hit, _ = first_passage(model, a, horizon, dt, rng,
                                       lower=0.0, upper=x)
        times[i] = t_hit if side != "none" else math.inf
    tail = _tail_from_values(times, thresholds, n_replicates, "exit", strict=True)
    fit = fit_rate(tail, with_log_correction=False)
    passed = _slope_pass(fit.slope, fit.se_slope, target)
    return _verdict("exit-rate", model, {"a": a, "x": x, "dt": dt}, target,
                    fit.slope, fit.se_slope, fit.window, n_replicates, passed,
                    {"fit": fit.to_dict(), "rho": rv.rho,
                     "rho_bracket": list(rv.bracket)})
