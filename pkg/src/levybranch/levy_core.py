"""Spectrally negative Levy models and their analytic characteristics.

A model is drift + Gaussian part + a negative-jump part.  All supported jump
parts have finite activity (compound Poisson, or a power-law density with a
hard small-jump cutoff), so the drift coefficient is the genuine path drift
and the Laplace exponent is

    psi(lam) = d*lam + eta^2*lam^2/2 + integral (e^{lam*x} - 1) nu(dx)

with nu supported on (-inf, 0).  From psi we derive the minimiser lambda_star,
the depth q_star = -psi(lambda_star), the largest-root inverse phi(q), and the
survival classification of the dyadic branching process killed at 0: it dies
out almost surely iff psi'(0+) < 0 and the branching rate beta is at most
q_star.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "ExponentialMagnitude",
    "FixedMagnitude",
    "MixtureOfExponentials",
    "CompoundPoisson",
    "TruncatedStableLike",
    "LevyModel",
    "Regime",
    "Characteristics",
    "psi",
    "psi_derivatives",
    "phi",
    "characteristics",
    "model_hash",
    "brownian_model",
    "compound_poisson_model",
    "truncated_stable_model",
    "asmussen_rosinski_sigma",
]

ROOT_TOL = 1e-12
CRITICAL_BAND = 1e-9


class Regime(Enum):
    """Survival classification of the branching process absorbed at 0."""

    DIES_OUT_SUBCRITICAL = "dies_out_subcritical"
    DIES_OUT_CRITICAL = "dies_out_critical"
    SURVIVES = "survives_with_positive_probability"


# ---------------------------------------------------------------------------
# Jump magnitude laws.  Magnitudes J are positive; the jump itself is -J.
# Each law exposes exp_moments(z) = (E e^{-zJ}, E J e^{-zJ}, E J^2 e^{-zJ}),
# valid for complex z with Re z inside the law's strip, plus sampling and
# Esscher tilting.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialMagnitude:
    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError(f"exponential magnitude mean must be positive, got {self.mean}")

    def exp_moments(self, z):
        g = 1.0 / (1.0 + z * self.mean)
        m = self.mean
        return g, m * g * g, 2.0 * m * m * g * g * g

    def mean_magnitude(self) -> float:
        return self.mean

    def density(self, u):
        return np.exp(-np.asarray(u) / self.mean) / self.mean

    def sample(self, rng, n: int):
        return rng.exponential(self.mean, n)

    def tilt(self, phi_c: float):
        factor = 1.0 / (1.0 + phi_c * self.mean)
        return factor, ExponentialMagnitude(self.mean * factor)


@dataclass(frozen=True)
class FixedMagnitude:
    size: float

    def __post_init__(self):
        if not self.size > 0:
            raise ValueError(f"fixed magnitude must be positive, got {self.size}")

    def exp_moments(self, z):
        g = np.exp(-z * self.size)
        return g, self.size * g, self.size * self.size * g

    def mean_magnitude(self) -> float:
        return self.size

    def sample(self, rng, n: int):
        return np.full(n, self.size)

    def tilt(self, phi_c: float):
        return math.exp(-phi_c * self.size), self


@dataclass(frozen=True)
class MixtureOfExponentials:
    weights: tuple
    means: tuple

    def __post_init__(self):
        if len(self.weights) != len(self.means) or not self.weights:
            raise ValueError("weights and means must be non-empty and of equal length")
        if any(w <= 0 for w in self.weights) or any(m <= 0 for m in self.means):
            raise ValueError("mixture weights and means must be strictly positive")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {sum(self.weights)}")

    def exp_moments(self, z):
        g0 = g1 = g2 = 0.0
        for w, m in zip(self.weights, self.means):
            g = 1.0 / (1.0 + z * m)
            g0 = g0 + w * g
            g1 = g1 + w * m * g * g
            g2 = g2 + w * 2.0 * m * m * g * g * g
        return g0, g1, g2

    def mean_magnitude(self) -> float:
        return sum(w * m for w, m in zip(self.weights, self.means))

    def density(self, u):
        u = np.asarray(u)
        return sum(w / m * np.exp(-u / m) for w, m in zip(self.weights, self.means))

    def sample(self, rng, n: int):
        comp = rng.choice(len(self.means), size=n, p=np.asarray(self.weights))
        return rng.exponential(1.0, n) * np.asarray(self.means)[comp]

    def tilt(self, phi_c: float):
        factors = [1.0 / (1.0 + phi_c * m) for m in self.means]
        total = sum(w * f for w, f in zip(self.weights, factors))
        new_w = tuple(w * f / total for w, f in zip(self.weights, factors))
        new_m = tuple(m * f for m, f in zip(self.means, factors))
        return total, MixtureOfExponentials(new_w, new_m)


NegativeJumpLaw = Union[ExponentialMagnitude, FixedMagnitude, MixtureOfExponentials]


@dataclass(frozen=True)
class CompoundPoisson:
    rate: float
    law: NegativeJumpLaw

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"compound Poisson rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class TruncatedStableLike:
    """Negative jumps with density activity * u^(-1-alpha) * exp(-tempering*u)
    on magnitudes u > cutoff.  The cutoff makes the activity finite, so the
    part behaves as a compound Poisson process with this magnitude law.
    """

    activity: float
    alpha: float
    tempering: float = 0.0
    cutoff: float = 1e-3

    def __post_init__(self):
        if not self.activity > 0:
            raise ValueError("activity must be positive")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.tempering < 0:
            raise ValueError("tempering must be nonnegative")
        if not self.cutoff > 0:
            raise ValueError(f"small-jump cutoff must be positive, got {self.cutoff}")
        if not math.isfinite(self.total_rate()):
            raise ValueError("jump activity does not integrate; increase cutoff")

    def _raw_density(self, u):
        return self.activity * u ** (-1.0 - self.alpha) * np.exp(-self.tempering * u)

    def total_rate(self) -> float:
        val, _ = integrate.quad(self._raw_density, self.cutoff, np.inf)
        return val

    def small_jump_variance(self) -> float:
        """Variance per unit time of the jumps removed below the cutoff."""
        val, _ = integrate.quad(lambda u: u * u * self._raw_density(u), 0.0, self.cutoff)
        return val

    def weighted_integrals(self, lam: float):
        """Adaptive quadrature of (e^{-lam u}, u e^{-lam u}, u^2 e^{-lam u})
        against the jump density; entries may be inf when the moment diverges.
        """
        out = []
        for k in (0, 1, 2):
            try:
                val, _ = integrate.quad(
                    lambda u: u ** k * math.exp(-lam * u) * self._raw_density(u),
                    self.cutoff, np.inf, limit=200)
            except Exception:
                val = math.inf
            if lam == 0.0 and k >= 1 and self.tempering == 0.0 and self.alpha <= k:
                val = math.inf
            out.append(val)
        return tuple(out)

    def contour_nodes(self):
        """Fixed Gauss-Legendre panels for vectorised complex-argument moments."""
        theta = self.tempering
        if theta > 0:
            u_hi = self.cutoff + max(80.0 / theta, 10.0 * self.cutoff)
        else:
            u_hi = self.cutoff * 1e9
        edges = np.geomspace(self.cutoff, u_hi, 80)
        x, w = np.polynomial.legendre.leggauss(10)
        half = (edges[1:] - edges[:-1])[:, None] / 2.0
        mid = (edges[1:] + edges[:-1])[:, None] / 2.0
        nodes = (mid + half * x[None, :]).ravel()
        weights = (half * w[None, :]).ravel()
        return nodes, weights * self._raw_density(nodes), float(self.activity / self.alpha * u_hi ** (-self.alpha) * math.exp(-theta * u_hi) if theta == 0 else 0.0)

    def sample(self, rng, n: int):
        """Magnitudes by Pareto proposal with exponential-tempering rejection."""
        out = np.empty(n)
        filled = 0
        while filled < n:
            todo = n - filled
            u = self.cutoff * rng.uniform(size=todo) ** (-1.0 / self.alpha)
            if self.tempering > 0:
                keep = rng.uniform(size=todo) < np.exp(-self.tempering * (u - self.cutoff))
                u = u[keep]
            out[filled:filled + len(u)] = u
            filled += len(u)
        return out

    def tilt(self, phi_c: float):
        tilted = TruncatedStableLike(self.activity, self.alpha,
                                     self.tempering + phi_c, self.cutoff)
        return tilted.total_rate() / self.total_rate(), tilted


JumpPart = Union[None, CompoundPoisson, TruncatedStableLike]


@dataclass(frozen=True)
class LevyModel:
    """Parametric spectrally negative Levy process.

    drift    : path drift d (space per unit time)
    gaussian : Gaussian coefficient eta (space per sqrt time), >= 0
    jumps    : None, CompoundPoisson, or TruncatedStableLike
    """

    drift: float
    gaussian: float = 0.0
    jumps: JumpPart = None

    def __post_init__(self):
        if self.gaussian < 0:
            raise ValueError("gaussian coefficient must be nonnegative")
        if self.gaussian == 0.0 and self.drift <= 0.0:
            # otherwise the negated process is a subordinator and the running
            # maximum is trivially the starting point
            raise ValueError("model must creep upward: require gaussian > 0 or drift > 0")

    @property
    def is_brownian(self) -> bool:
        return self.jumps is None

    @property
    def bounded_variation(self) -> bool:
        return self.gaussian == 0.0


def brownian_model(drift: float, gaussian: float) -> LevyModel:
    return LevyModel(drift=drift, gaussian=gaussian, jumps=None)


def compound_poisson_model(drift: float, gaussian: float, rate: float,
                           law: NegativeJumpLaw) -> LevyModel:
    return LevyModel(drift=drift, gaussian=gaussian, jumps=CompoundPoisson(rate, law))


def asmussen_rosinski_sigma(part: TruncatedStableLike) -> float:
    """Gaussian standard deviation matching the variance of the cut small jumps."""
    return math.sqrt(part.small_jump_variance())


def truncated_stable_model(drift: float, gaussian: float, activity: float,
                           alpha: float, tempering: float = 0.0,
                           cutoff: float = 1e-3,
                           small_jump_correction: bool = False) -> LevyModel:
    """Truncated power-law jump model.

    With ``small_jump_correction`` the discarded sub-cutoff jumps are folded
    into the Gaussian coefficient (variance matching), which keeps the model
    close to its untruncated limit as the cutoff is lowered.
    """
    part = TruncatedStableLike(activity, alpha, tempering, cutoff)
    if small_jump_correction:
        gaussian = math.sqrt(gaussian ** 2 + part.small_jump_variance())
    return LevyModel(drift=drift, gaussian=gaussian, jumps=part)


def model_hash(model: LevyModel) -> str:
    """Stable short hash identifying the model parameters."""
    return hashlib.sha256(repr(model).encode("utf-8")).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Laplace exponent and derivatives
# ---------------------------------------------------------------------------


def _jump_moments(model: LevyModel, lam: float, method: str = "auto"):
    """(rate*E e^{-lam J}, rate*E J e^{-lam J}, rate*E J^2 e^{-lam J}, rate)."""
    jumps = model.jumps
    if jumps is None:
        return 0.0, 0.0, 0.0, 0.0
    if isinstance(jumps, CompoundPoisson):
        law = jumps.law
        use_quad = method == "quadrature" and not isinstance(law, FixedMagnitude)
        if use_quad:
            g = []
            for k in (0, 1, 2):
                val, _ = integrate.quad(
                    lambda u: u ** k * math.exp(-lam * u) * law.density(u),
                    0.0, np.inf, limit=200)
                g.append(val)
            g0, g1, g2 = g
        else:
            g0, g1, g2 = law.exp_moments(lam)
        return jumps.rate * g0, jumps.rate * g1, jumps.rate * g2, jumps.rate
    if isinstance(jumps, TruncatedStableLike):
        g0, g1, g2 = jumps.weighted_integrals(lam)
        return g0, g1, g2, jumps.total_rate()
    raise TypeError(f"unsupported jump part {type(jumps)!r}")


def psi(model: LevyModel, lam, method: str = "auto"):
    """Laplace exponent psi(lam) = log E exp(lam * L_1), lam >= 0."""
    if np.isscalar(lam):
        if lam < 0:
            raise ValueError("psi is evaluated for lam >= 0 only")
        g0, _, _, rate = _jump_moments(model, float(lam), method=method)
        return model.drift * lam + 0.5 * model.gaussian ** 2 * lam * lam + (g0 - rate)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("psi is evaluated for lam >= 0 only")
    return np.array([psi(model, v, method=method) for v in lam])


def psi_complex(model: LevyModel, z):
    """psi on complex arguments with Re(z) >= 0; internal transform plumbing."""
    z = np.asarray(z, dtype=complex)
    jumps = model.jumps
    if jumps is None:
        jump_term = 0.0
    elif isinstance(jumps, CompoundPoisson):
        g0, _, _ = jumps.law.exp_moments(z)
        jump_term = jumps.rate * (g0 - 1.0)
    elif isinstance(jumps, TruncatedStableLike):
        nodes, wdens, tail0 = jumps.contour_nodes()
        g0 = np.exp(-np.multiply.outer(z, nodes)) @ wdens
        rate = float(np.sum(wdens))
        if tail0 > 0.0:
            g0 = g0 + tail0 * np.exp(-z * nodes[-1])
            rate += tail0
        jump_term = g0 - rate
    else:
        raise TypeError(f"unsupported jump part {type(jumps)!r}")
    return model.drift * z + 0.5 * model.gaussian ** 2 * z * z + jump_term


def psi_derivatives(model: LevyModel, lam: float, method: str = "auto"):
    """(psi'(lam), psi''(lam)); psi'' is strictly positive for valid models."""
    if lam < 0:
        raise ValueError("psi derivatives are evaluated for lam >= 0 only")
    _, g1, g2, _ = _jump_moments(model, float(lam), method=method)
    d1 = model.drift + model.gaussian ** 2 * lam - g1
    d2 = model.gaussian ** 2 + g2
    return d1, d2


@dataclass(frozen=True)
class Characteristics:
    """Derived quantities of a model: minimiser, depth, and classification."""

    psi_prime_at_zero: float
    lambda_star: Optional[float]
    q_star: Optional[float]
    psi_second_at_star: Optional[float]
    critical_band: float = CRITICAL_BAND

    def regime(self, beta: float) -> Regime:
        if beta <= 0:
            raise ValueError("branching rate must be positive")
        if self.q_star is None:
            return Regime.SURVIVES
        band = self.critical_band * max(1.0, self.q_star)
        if abs(beta - self.q_star) <= band:
            return Regime.DIES_OUT_CRITICAL
        if beta < self.q_star:
            return Regime.DIES_OUT_SUBCRITICAL
        return Regime.SURVIVES


def characteristics(model: LevyModel, critical_band: float = CRITICAL_BAND) -> Characteristics:
    """psi'(0+), lambda_star, q_star = -psi(lambda_star), psi''(lambda_star).

    lambda_star is located by bracketed root-finding on psi' (which is
    continuous and strictly increasing); q_star exists iff psi'(0+) < 0.
    """
    d1, _ = psi_derivatives(model, 0.0)
    if d1 >= 0:
        return Characteristics(d1, None, None, None, critical_band)

    def dpsi(lam):
        return psi_derivatives(model, lam)[0]

    hi = 1.0
    while dpsi(hi) <= 0:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("failed to bracket lambda_star")
    lo = 0.0 if math.isfinite(d1) else 1e-12
    lam_star = optimize.brentq(dpsi, lo, hi, xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps)
    q_star = -psi(model, lam_star)
    _, d2 = psi_derivatives(model, lam_star)
    return Characteristics(d1, lam_star, q_star, d2, critical_band)


def phi(model: LevyModel, q: float, chars: Characteristics = None) -> float:
    """Largest root of psi(lam) = q.

    Defined for q >= -q_star when psi'(0+) < 0, else for q >= 0.  The root is
    bracketed on [lambda_star, hi] (or [phi(0), hi] = [0, hi] for models that
    do not drift down) with hi doubled until psi(hi) > q.
    """
    if chars is None:
        chars = characteristics(model)
    if chars.q_star is not None:
        if q < -chars.q_star - 1e-12 * max(1.0, chars.q_star):
            raise ValueError(f"no real root: q={q} is below -q_star={-chars.q_star:.12g}")
        lo = chars.lambda_star
        if q <= -chars.q_star:
            return lo
    else:
        if q < 0:
            raise ValueError(f"no real root: q={q} < 0 and the process does not drift down")
        if q == 0.0:
            return 0.0
        lo = 0.0

    def f(lam):
        return psi(model, lam) - q

    hi = max(2.0 * lo, lo + 1.0)
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("failed to bracket phi(q)")
    if f(lo) >= 0:
        return lo
    return optimize.brentq(f, lo, hi, xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps)
