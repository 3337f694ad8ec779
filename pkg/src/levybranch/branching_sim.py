"""Event-driven Monte Carlo for the dyadic branching process absorbed at 0.

Each particle owns a counter-based random stream; children derive theirs
from the parent key and the child index, so the draw sequence of a particle
depends only on its position in the family tree.  Between jumps the path is
advanced on micro-steps of size dt with a Brownian-bridge correction for
barrier crossings (crossing probability exp(-2*y1*y2/(eta^2*dt)) for
same-side endpoints), while compound Poisson jumps are placed exactly.

Replicates are embarrassingly parallel: replicate i always uses the stream
derived from (seed, i), and batch results are reassembled in replicate order,
so aggregate statistics do not depend on the worker count.
"""
from __future__ import annotations

import heapq
import math
import multiprocessing
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _rng
from .errors import InputError
from .levy_core import (CompoundPoisson, LevyModel, TruncatedStableLike,
                        characteristics, phi)

__all__ = [
    "BranchingConfig",
    "PopulationOutcome",
    "SegmentResult",
    "ReplicateBatch",
    "TailEstimate",
    "sample_segment",
    "simulate_population",
    "run_replicates",
    "wilson_interval",
    "extinction_tail",
    "max_tail",
    "free_max_tail",
    "free_run",
    "expected_count_check",
    "exit_law_checks",
    "first_passage",
    "sample_endpoint",
]


# ---------------------------------------------------------------------------
# Path segments
# ---------------------------------------------------------------------------


@dataclass
class SegmentResult:
    end: float
    run_min: float
    run_max: float
    hit_lower: bool
    hit_time: Optional[float]
    hit_upper: bool = False
    upper_time: Optional[float] = None
    integral: float = 0.0  # trapezoid of a caller-supplied integrand along the path


@lru_cache(maxsize=64)
def _jump_rate(jumps) -> float:
    if isinstance(jumps, CompoundPoisson):
        return jumps.rate
    if isinstance(jumps, TruncatedStableLike):
        return jumps.total_rate()
    raise TypeError(f"unsupported jump part {type(jumps)!r}")


def _jump_law(jumps):
    return jumps.law if isinstance(jumps, CompoundPoisson) else jumps


def _trapz_path(head: np.ndarray, delta: float, integrand) -> float:
    if integrand is None or len(head) < 2:
        return 0.0
    vals = integrand(head)
    return float(delta * (np.sum(vals) - 0.5 * (vals[0] + vals[-1])))


def _diffuse(y, length, dt, d, eta, rng, upper, integrand=None):
    """One driftful-Gaussian stretch with absorbing barrier at 0 (and at
    ``upper`` when given).  Returns a SegmentResult in segment-local time.

    Times within a crossing micro-step are linearly interpolated for direct
    crossings and set to the midpoint for bridge crossings; the running
    extremes use micro-step endpoints only.
    """
    if length <= 0:
        return SegmentResult(y, y, y, False, None)
    if eta == 0.0:
        end = y + d * length
        if upper is not None and max(y, end) >= upper and d > 0:
            t_up = (upper - y) / d
            if t_up <= length:
                integ = 0.0 if integrand is None else float(
                    t_up * 0.5 * (integrand(np.array([y]))[0] + integrand(np.array([upper]))[0]))
                return SegmentResult(upper, y, upper, False, None, True, t_up, integ)
        if end <= 0 and d < 0:
            t_lo = -y / d
            integ = 0.0 if integrand is None else float(
                t_lo * 0.5 * (integrand(np.array([y]))[0] + integrand(np.array([0.0]))[0]))
            return SegmentResult(0.0, 0.0, y, True, t_lo, integral=integ)
        integ = 0.0 if integrand is None else float(
            length * 0.5 * (integrand(np.array([y]))[0] + integrand(np.array([end]))[0]))
        return SegmentResult(end, min(y, end), max(y, end), False, None, integral=integ)

    n = max(1, int(math.ceil(length / dt)))
    delta = length / n
    z = rng.standard_normal(n)
    pos = y + np.cumsum(d * delta + eta * math.sqrt(delta) * z)
    prev = np.empty(n)
    prev[0] = y
    prev[1:] = pos[:-1]
    u_low = rng.uniform(size=n)
    scale = 2.0 / (eta * eta * delta)
    with np.errstate(over="ignore"):
        p_low = np.exp(-scale * prev * pos)
    cross_low = (pos <= 0.0) | (u_low < p_low)
    k_low = int(np.argmax(cross_low)) if cross_low.any() else None

    k_up = None
    if upper is not None:
        u_up = rng.uniform(size=n)
        with np.errstate(over="ignore"):
            p_up = np.exp(-scale * (upper - prev) * (upper - pos))
        cross_up = (pos >= upper) | (u_up < p_up)
        if cross_up.any():
            k_up = int(np.argmax(cross_up))

    if k_low is not None and (k_up is None or k_low < k_up):
        k, side = k_low, "lower"
    elif k_up is not None and (k_low is None or k_up < k_low):
        k, side = k_up, "upper"
    elif k_low is not None:  # same step; closer barrier wins
        k = k_low
        side = "lower" if prev[k] <= (upper - prev[k]) else "upper"
    else:
        k, side = None, None

    if k is None:
        head = np.concatenate(([y], pos))
        return SegmentResult(float(pos[-1]), float(head.min()), float(head.max()),
                             False, None, integral=_trapz_path(head, delta, integrand))

    head = np.concatenate(([y], pos[:k]))
    integ = _trapz_path(head, delta, integrand)
    if side == "lower":
        if pos[k] <= 0.0:
            frac = prev[k] / (prev[k] - pos[k])
            t_hit = (k + min(max(frac, 0.0), 1.0)) * delta
        else:
            t_hit = (k + 0.5) * delta
        return SegmentResult(0.0, 0.0, float(head.max()), True, float(t_hit), integral=integ)
    if pos[k] >= upper:
        frac = (upper - prev[k]) / (pos[k] - prev[k])
        t_hit = (k + min(max(frac, 0.0), 1.0)) * delta
    else:
        t_hit = (k + 0.5) * delta
    return SegmentResult(float(upper), float(head.min()), float(upper), False, None,
                         True, float(t_hit), integ)


def sample_segment(model: LevyModel, start: float, duration: float, dt: float,
                   rng, upper: Optional[float] = None,
                   integrand=None) -> SegmentResult:
    """Simulate one particle over ``duration`` with absorption at 0.

    Compound Poisson jump times and sizes are drawn exactly; the diffusive
    stretches between them use `_diffuse`.  Draw order is fixed (jump
    schedule, then per-stretch normals and uniforms) so that two models
    differing only in drift consume identical variates.
    """
    if start <= 0:
        raise InputError("segments must start strictly above the barrier")
    if duration <= 0:
        return SegmentResult(start, start, start, False, None)
    dt = min(dt, duration)
    d, eta = model.drift, model.gaussian

    if model.jumps is None:
        times = np.empty(0)
        mags = np.empty(0)
    else:
        rate = _jump_rate(model.jumps)
        n_jumps = rng.poisson(rate * duration)
        times = np.sort(rng.uniform(0.0, duration, n_jumps))
        mags = _jump_law(model.jumps).sample(rng, n_jumps)

    y = start
    run_min = start
    run_max = start
    integral = 0.0
    t0 = 0.0
    bounds = np.concatenate((times, [duration]))
    for i, t1 in enumerate(bounds):
        seg = _diffuse(y, t1 - t0, dt, d, eta, rng, upper, integrand)
        run_min = min(run_min, seg.run_min)
        run_max = max(run_max, seg.run_max)
        integral += seg.integral
        if seg.hit_lower:
            return SegmentResult(0.0, run_min, run_max, True, t0 + seg.hit_time,
                                 integral=integral)
        if seg.hit_upper:
            return SegmentResult(seg.end, run_min, run_max, False, None,
                                 True, t0 + seg.upper_time, integral)
        y = seg.end
        if i < len(times):
            y -= mags[i]
            run_min = min(run_min, y)
            if y <= 0.0:
                return SegmentResult(0.0, run_min, run_max, True, t1, integral=integral)
        t0 = t1
    return SegmentResult(y, run_min, run_max, False, None, integral=integral)


def first_passage(model: LevyModel, start: float, horizon: float, dt: float,
                  rng, lower: float = 0.0, upper: Optional[float] = None):
    """Single-particle two-sided exit: returns (side, time, end_position)
    with side one of 'lower', 'upper', 'none' (censored at the horizon).
    """
    up = None if upper is None else upper - lower
    seg = sample_segment(model, start - lower, horizon, dt, rng, upper=up)
    if seg.hit_lower:
        return "lower", seg.hit_time, lower
    if seg.hit_upper:
        return "upper", seg.upper_time, upper
    return "none", horizon, seg.end + lower


def sample_endpoint(model: LevyModel, start: float, t: float, rng, n: int) -> np.ndarray:
    """Exact draws of the free path value L_t (no barrier, no discretisation)."""
    out = np.full(n, start + model.drift * t, dtype=float)
    if model.gaussian > 0:
        out += model.gaussian * math.sqrt(t) * rng.standard_normal(n)
    if model.jumps is not None:
        rate = _jump_rate(model.jumps)
        counts = rng.poisson(rate * t, n)
        total = int(counts.sum())
        if total:
            mags = _jump_law(model.jumps).sample(rng, total)
            owner = np.repeat(np.arange(n), counts)
            out -= np.bincount(owner, weights=mags, minlength=n)
    return out


# ---------------------------------------------------------------------------
# Population engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchingConfig:
    model: LevyModel
    beta: float
    start: float
    horizon: float
    dt: float
    seed: int
    particle_cap: int = 1_000_000
    count_times: Optional[tuple] = None
    upper_level: Optional[float] = None  # stop once any particle reaches it

    def __post_init__(self):
        if self.beta < 0:
            raise InputError("branching rate must be nonnegative")
        if self.start <= 0:
            raise InputError("start must be positive")
        if self.horizon <= 0:
            raise InputError("horizon must be positive")
        if not 0 < self.dt <= self.horizon / 100.0:
            raise InputError("dt must satisfy 0 < dt <= horizon/100")
        if self.particle_cap < 1:
            raise InputError("particle_cap must be at least 1")
        if self.upper_level is not None and self.upper_level <= self.start:
            raise InputError("upper_level must exceed start")


@dataclass
class PopulationOutcome:
    """One replicate: extinction time (or censor marker), all-time maximum,
    and population counts on the configured lattice.

    For cap-censored replicates the recorded maximum may include segment
    stretches simulated slightly past the censor time.  When the config
    carries an upper level, ``reached_upper`` flags the bridge-corrected
    level-hitting event and the replicate stops there (extinction fields are
    then censored at the hitting time).
    """

    extinction_time: Optional[float]
    censored: Optional[str]  # None | 'horizon' | 'cap' | 'reached'
    max_location: float
    counts: Optional[np.ndarray]
    n_particles: int
    n_branches: int
    reached_upper: bool = False
    reached_time: Optional[float] = None

    @property
    def extinct(self) -> bool:
        return self.censored is None


def simulate_population(config: BranchingConfig, replicate: int = 0) -> PopulationOutcome:
    """Run one replicate of the branching process; deterministic in
    (config, replicate)."""
    model, beta = config.model, config.beta
    horizon, cap = config.horizon, config.particle_cap
    heap = []
    seq = 0
    alive = 0
    n_particles = 0
    n_branches = 0
    run_max = config.start
    intervals = [] if config.count_times is not None else None
    horizon_survivors = 0
    pool = _rng.PhiloxPool()

    def spawn(birth: float, pos: float, key):
        nonlocal seq, alive, n_particles, run_max
        rng = pool.rekey(key)
        wait = rng.exponential(1.0 / beta) if beta > 0 else math.inf
        dur = min(wait, horizon - birth)
        seg = sample_segment(model, pos, dur, config.dt, rng,
                             upper=config.upper_level)
        run_max = max(run_max, seg.run_max)
        at_horizon = False
        if seg.hit_upper:
            end = birth + seg.upper_time
            heapq.heappush(heap, (end, seq, "reached", None))
        elif seg.hit_lower:
            end = birth + seg.hit_time
            heapq.heappush(heap, (end, seq, "death", None))
        elif wait < horizon - birth:
            end = birth + wait
            heapq.heappush(heap, (end, seq, "branch", (seg.end, key)))
        else:
            end = horizon
            at_horizon = True
            heapq.heappush(heap, (horizon, seq, "horizon", None))
        seq += 1
        alive += 1
        n_particles += 1
        if intervals is not None:
            intervals.append((birth, end, at_horizon))

    spawn(0.0, config.start, _rng.stream_key(config.seed, replicate))

    extinction_time = None
    censored = None
    reached_upper = False
    reached_time = None
    while heap:
        t, _, kind, payload = heapq.heappop(heap)
        if kind == "reached":
            reached_upper = True
            reached_time = t
            censored = "reached"
            break
        if kind == "death":
            alive -= 1
            if alive == 0 and horizon_survivors == 0:
                extinction_time = t
                break
        elif kind == "horizon":
            alive -= 1
            horizon_survivors += 1
        else:  # branch
            alive -= 1
            if alive + 2 > cap:
                censored = "cap"
                extinction_time = None
                break
            n_branches += 1
            pos, key = payload
            spawn(t, pos, _rng.child_key(key, 0))
            spawn(t, pos, _rng.child_key(key, 1))
    if censored is None and extinction_time is None:
        censored = "horizon"

    counts = None
    if intervals is not None:
        lattice = np.asarray(config.count_times, dtype=float)
        counts = np.zeros(len(lattice), dtype=np.int64)
        for birth, end, at_horizon in intervals:
            i0 = np.searchsorted(lattice, birth, side="left")
            # a particle that lived to the horizon is still alive there
            i1 = np.searchsorted(lattice, end, side="right" if at_horizon else "left")
            counts[i0:i1] += 1
    return PopulationOutcome(extinction_time, censored, run_max, counts,
                             n_particles, n_branches, reached_upper, reached_time)


# ---------------------------------------------------------------------------
# Replicate batches
# ---------------------------------------------------------------------------


@dataclass
class ReplicateBatch:
    config: BranchingConfig
    zeta: np.ndarray          # extinction time, or censor time
    status: np.ndarray        # 0 extinct, 1 horizon-censored, 2 cap-censored
    max_location: np.ndarray
    counts: Optional[np.ndarray]  # (n, len(count_times)) or None

    @property
    def n(self) -> int:
        return len(self.zeta)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("replicate_id,stream_key,extinction_time,censor,max_location\n")
            for i in range(self.n):
                k0, k1 = _rng.stream_key(self.config.seed, i)
                status = int(self.status[i])
                censor = "" if status == 0 else ("horizon" if status == 1 else "cap")
                zeta = "" if status != 0 else repr(float(self.zeta[i]))
                fh.write(f"{i},{k0:016x}{k1:016x},{zeta},{censor},{float(self.max_location[i])!r}\n")

    def counts_to_csv(self, path) -> None:
        if self.counts is None:
            raise InputError("this batch was run without population counts")
        lattice = np.asarray(self.config.count_times, dtype=float)
        mean = self.counts.mean(axis=0)
        se = self.counts.std(axis=0, ddof=1) / math.sqrt(self.n)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,mean_count,se,n_replicates\n")
            for t, m, s in zip(lattice, mean, se):
                fh.write(f"{float(t)!r},{float(m)!r},{float(s)!r},{self.n}\n")


def _run_indices(config: BranchingConfig, indices) -> tuple:
    zeta = np.empty(len(indices))
    status = np.empty(len(indices), dtype=np.uint8)
    mmax = np.empty(len(indices))
    counts = None
    if config.count_times is not None:
        counts = np.empty((len(indices), len(config.count_times)), dtype=np.int64)
    for j, i in enumerate(indices):
        out = simulate_population(config, replicate=i)
        if out.extinct:
            zeta[j] = out.extinction_time
            status[j] = 0
        elif out.censored == "reached":
            zeta[j] = out.reached_time
            status[j] = 3
        else:
            zeta[j] = config.horizon
            status[j] = 1 if out.censored == "horizon" else 2
        mmax[j] = out.max_location
        if counts is not None:
            counts[j] = out.counts
    return zeta, status, mmax, counts


def _run_indices_star(args):
    return _run_indices(*args)


def run_replicates(config: BranchingConfig, n: int, jobs: int = 1) -> ReplicateBatch:
    """Simulate n replicates; identical aggregates for any jobs >= 1."""
    indices = np.arange(n)
    if jobs <= 1:
        parts = [_run_indices(config, indices)]
    else:
        chunks = np.array_split(indices, jobs * 4)
        chunks = [c for c in chunks if len(c)]
        with multiprocessing.Pool(jobs) as pool:
            parts = pool.map(_run_indices_star, [(config, c) for c in chunks])
    zeta = np.concatenate([p[0] for p in parts])
    status = np.concatenate([p[1] for p in parts])
    mmax = np.concatenate([p[2] for p in parts])
    counts = None
    if config.count_times is not None:
        counts = np.concatenate([p[3] for p in parts], axis=0)
    return ReplicateBatch(config, zeta, status, mmax, counts)


# ---------------------------------------------------------------------------
# Tail estimates
# ---------------------------------------------------------------------------


def wilson_interval(k: int, n: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass
class TailEstimate:
    """Empirical survival function with Wilson bands on a threshold grid."""

    thresholds: np.ndarray
    survival_prob: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    n_replicates: int
    counts: np.ndarray
    kind: str = "maximum"

    def __post_init__(self):
        if np.any(np.diff(self.survival_prob) > 1e-12):
            raise InputError("survival probabilities must be nonincreasing in the threshold")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("threshold,survival_prob,ci_lo,ci_hi,count,n_replicates\n")
            for i, t in enumerate(self.thresholds):
                fh.write(f"{float(t)!r},{float(self.survival_prob[i])!r},{float(self.ci_lo[i])!r},"
                         f"{float(self.ci_hi[i])!r},{int(self.counts[i])},{self.n_replicates}\n")


def _tail_from_values(values: np.ndarray, thresholds, n_eff: int, kind: str,
                      strict: bool) -> TailEstimate:
    thresholds = np.asarray(thresholds, dtype=float)
    op = np.greater if strict else np.greater_equal
    counts = np.array([int(np.sum(op(values, t))) for t in thresholds])
    probs = counts / n_eff
    ci = np.array([wilson_interval(k, n_eff) for k in counts])
    return TailEstimate(thresholds, probs, ci[:, 0], ci[:, 1], n_eff, counts, kind)


def extinction_tail(batch: ReplicateBatch, thresholds) -> TailEstimate:
    """P(zeta > t) on a t-grid.  Horizon-censored replicates count as
    survivors for every t < horizon; cap-censored replicates are excluded
    (their lifetime is evidence of non-extinction, not of its timing)."""
    if batch.config.upper_level is not None:
        raise InputError("tails need a run without an upper stopping level")
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(thresholds >= batch.config.horizon):
        raise InputError("extinction thresholds must lie below the horizon")
    keep = batch.status != 2
    vals = batch.zeta[keep].copy()
    vals[batch.status[keep] == 1] = np.inf
    return _tail_from_values(vals, thresholds, int(keep.sum()), "extinction", strict=True)


def max_tail(batch: ReplicateBatch, thresholds) -> TailEstimate:
    """P(M >= x) on an x-grid; cap-censored replicates are excluded.

    Maxima are recorded from micro-step endpoints, which understates the
    level by O(sqrt(dt)); `level_hitting_probability` gives the unbiased
    bridge-corrected estimator for a single level.
    """
    if batch.config.upper_level is not None:
        raise InputError("tails need a run without an upper stopping level")
    keep = batch.status != 2
    return _tail_from_values(batch.max_location[keep], thresholds,
                             int(keep.sum()), "maximum", strict=False)


def level_hitting_probability(model: LevyModel, beta: float, a: float,
                              x: float, n: int, horizon: float, dt: float,
                              seed: int, jobs: int = 1,
                              particle_cap: int = 1_000_000) -> dict:
    """Unbiased estimate of P_a(M >= x) as a level-hitting event.

    The population runs with a bridge-corrected absorbing detector at x, so
    unlike the recorded running maximum the estimate carries no
    O(sqrt(dt)) endpoint bias.  Horizon censoring biases downward by the
    (negligible for subcritical runs) chance of a first visit after the
    horizon.
    """
    cfg = BranchingConfig(model=model, beta=beta, start=a, horizon=horizon,
                          dt=dt, seed=seed, particle_cap=particle_cap,
                          upper_level=x)
    batch = run_replicates(cfg, n, jobs=jobs)
    k = int(np.sum(batch.status == 3))
    lo, hi = wilson_interval(k, n)
    return {"x": x, "estimate": k / n, "ci_lo": lo, "ci_hi": hi, "n": n,
            "hits": k, "cap_censored": int(np.sum(batch.status == 2))}


def free_run(model: LevyModel, beta: float, n: int, horizon: float, dt: float,
             seed: int, depth: Optional[float] = None, jobs: int = 1,
             particle_cap: int = 1_000_000):
    """Free-mode branching run started at 0, realised by translation.

    The barrier is pushed down to -depth; by spatial homogeneity this is an
    absorbed run started at `depth` with all locations shifted.  The pruning
    bias on P(M >= x) is bounded by exp(-phi(-beta)*depth) per absorbed line,
    so the default depth makes it negligible against Monte Carlo noise.
    """
    if depth is None:
        phi_nb = phi(model, -beta)
        depth = float(math.ceil(16.2 / phi_nb))
    cfg = BranchingConfig(model=model, beta=beta, start=depth,
                          horizon=horizon, dt=dt, seed=seed,
                          particle_cap=particle_cap)
    batch = run_replicates(cfg, n, jobs=jobs)
    return batch, depth


def free_max_tail(model: LevyModel, beta: float, thresholds, n: int,
                  horizon: float, dt: float, seed: int,
                  depth: Optional[float] = None, jobs: int = 1) -> TailEstimate:
    """P_0(M_free >= x) via the deep-barrier translation."""
    batch, depth = free_run(model, beta, n, horizon, dt, seed, depth, jobs)
    shifted = np.asarray(thresholds, dtype=float) + depth
    est = max_tail(batch, shifted)
    est.thresholds = np.asarray(thresholds, dtype=float)
    return est


# ---------------------------------------------------------------------------
# Identity checks driven by independent estimators
# ---------------------------------------------------------------------------


def expected_count_check(config: BranchingConfig, n_replicates: int,
                         jobs: int = 1) -> dict:
    """Compare the branching-population mean count with the product identity
    e^{beta t} * P(tau_0 > t), the latter estimated from independent
    single-particle runs; report a z-score per lattice time."""
    if config.count_times is None:
        raise InputError("config must carry count_times")
    batch = run_replicates(config, n_replicates, jobs=jobs)
    times = np.asarray(config.count_times, dtype=float)
    mean_n = batch.counts.mean(axis=0)
    var_n = batch.counts.var(axis=0, ddof=1)

    rng = _rng.generator(_rng.stream_key(config.seed, "single-particle-oracle"))
    alive = np.zeros(len(times))
    for _ in range(n_replicates):
        seg = sample_segment(config.model, config.start, config.horizon, config.dt, rng)
        death = seg.hit_time if seg.hit_lower else math.inf
        alive += times < death
    p_hat = alive / n_replicates
    se_p = np.sqrt(p_hat * (1 - p_hat) / n_replicates)

    growth = np.exp(config.beta * times)
    target = growth * p_hat
    se = np.sqrt(var_n / n_replicates + (growth * se_p) ** 2)
    z = (mean_n - target) / np.where(se > 0, se, np.inf)
    return {
        "times": times.tolist(),
        "mean_count": mean_n.tolist(),
        "product_identity": target.tolist(),
        "z_scores": z.tolist(),
        "max_abs_z": float(np.max(np.abs(z))),
        "n_replicates": n_replicates,
    }


def exit_law_checks(model: LevyModel, a: float, x: float, q: float,
                    beta: float, n_replicates: int, dt: float, seed: int,
                    horizon: float = 200.0) -> dict:
    """Single-particle exit identities against scale-function targets.

    (i)  E[e^{-q tau_x^+}; tau_x^+ < inf]   vs  e^{-phi(q)(x-a)}
    (ii) P(tau_x^+ <= e_beta and tau_x^+ < tau_0^-)  vs  W^(beta)(a)/W^(beta)(x)
    """
    from .scale_fn import scale_value

    if not 0 < a < x:
        raise InputError("need 0 < a < x")
    chars = characteristics(model)
    phi_q = phi(model, q, chars)

    # (i): no absorbing barrier; censor far below where returns are hopeless
    depth = 40.0 / max(phi(model, 0.0, chars), 0.25)
    rng = _rng.generator(_rng.stream_key(seed, "one-sided"))
    vals = np.zeros(n_replicates)
    for i in range(n_replicates):
        side, t_hit, _ = first_passage(model, a, horizon, dt, rng,
                                       lower=a - depth, upper=x)
        if side == "upper":
            vals[i] = math.exp(-q * t_hit)
    est1 = float(vals.mean())
    se1 = float(vals.std(ddof=1) / math.sqrt(n_replicates))
    tgt1 = math.exp(-phi_q * (x - a))
    z1 = (est1 - tgt1) / se1 if se1 > 0 else math.inf

    # (ii): barrier at 0, exponential clock at rate beta
    rng2 = _rng.generator(_rng.stream_key(seed, "two-sided"))
    hits = np.zeros(n_replicates)
    for i in range(n_replicates):
        clock = rng2.exponential(1.0 / beta)
        side, t_hit, _ = first_passage(model, a, min(clock, horizon), dt, rng2,
                                       lower=0.0, upper=x)
        hits[i] = 1.0 if (side == "upper" and t_hit <= clock) else 0.0
    est2 = float(hits.mean())
    se2 = float(hits.std(ddof=1) / math.sqrt(n_replicates))
    tgt2 = scale_value(model, beta, a) / scale_value(model, beta, x)
    z2 = (est2 - tgt2) / se2 if se2 > 0 else math.inf

    return {
        "one_sided": {"estimate": est1, "target": tgt1, "se": se1, "z": float(z1)},
        "two_sided": {"estimate": est2, "target": tgt2, "se": se2, "z": float(z2)},
        "n_replicates": n_replicates,
        "max_abs_z": float(max(abs(z1), abs(z2))),
    }
