"""Saturation model of 802.11 DCF over an error-prone channel.

A station's backoff is a two-dimensional Markov chain over (stage, timer).
Stage ``i`` draws its timer from ``{0, ..., W_i - 1}`` with ``W_i = W * 2**min(i, m)``;
after ``m + f + 1`` failed attempts the frame is dropped. An attempt fails if it
collides (probability ``p1``) or is corrupted by the channel (probability ``p_f``).

Series sums are used for the transmission probability and the per-stage delays;
the closed forms (removable singularities at ``p = 1/2`` and ``p = 1``) are kept as
cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .timing import AccessMode, ChannelTimes, MacTimingParams, channel_times

PERSISTENT = math.inf
"""Value of ``f`` for the persist-until-success strategy (no discards)."""

BISECTION_MAX_ITER = 200
RESIDUAL_TOL = 1e-12


class DomainError(ValueError):
    """A parameter lies outside the domain where a quantity is defined."""


class ConvergenceError(RuntimeError):
    pass


class DivergentDelayError(ArithmeticError):
    """Persistent retransmission with certain failure: the delay is unbounded."""


@dataclass(frozen=True)
class BackoffParams:
    w0: int = 8
    m: int = 5
    f: float = PERSISTENT

    def __post_init__(self):
        if int(self.w0) != self.w0 or self.w0 < 1:
            raise DomainError(f"w0 must be an integer >= 1, got {self.w0}")
        if int(self.m) != self.m or self.m < 0:
            raise DomainError(f"m must be an integer >= 0, got {self.m}")
        if not self.persistent and (int(self.f) != self.f or self.f < 0):
            raise DomainError(f"f must be an integer >= 0 or PERSISTENT, got {self.f}")

    @property
    def persistent(self) -> bool:
        return math.isinf(self.f)

    @property
    def max_stage(self) -> float:
        """Index of the last stage, ``m + f`` (infinite when persistent)."""
        return self.m + self.f

    @property
    def retry_limit(self) -> float:
        """Attempts after which a frame is discarded, ``m + f + 1``."""
        return self.m + self.f + 1


@dataclass(frozen=True)
class Scenario:
    n: int
    p_f: float = 0.0
    backoff: BackoffParams = field(default_factory=BackoffParams)
    mode: AccessMode = AccessMode.BASIC
    timing: MacTimingParams = field(default_factory=MacTimingParams)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be an integer >= 1, got {self.n}")
        if not 0.0 <= self.p_f <= 1.0:
            raise DomainError(f"p_f must lie in [0, 1], got {self.p_f}")
        object.__setattr__(self, "mode", AccessMode.parse(self.mode))

    @property
    def times(self) -> ChannelTimes:
        return channel_times(self.mode, self.timing)


@dataclass(frozen=True)
class FixedPointSolution:
    tau: float
    p: float
    p1: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class ChainDistribution:
    b: list  # b[i] is a float array of length W_i
    b00: float

    def total(self) -> float:
        return math.fsum(float(row.sum()) for row in self.b)

    def transmit_states(self) -> np.ndarray:
        return np.array([row[0] for row in self.b])


@dataclass(frozen=True)
class RenewalCycle:
    """Activity of the other ``n - 1`` stations between two of their busy slots.

    ``p1_t_rc`` is the mean duration of one slot as seen by a deferring station;
    it stays finite when ``p1 = 0`` where ``n_idle`` and ``t_rc`` do not.
    """

    p1s: float
    n_idle: float
    t_rc: float
    t_coe: float
    p1_t_rc: float


@dataclass(frozen=True)
class PerfMetrics:
    solution: FixedPointSolution
    throughput: float
    delay_us: float
    discard_prob: float
    p_tr: float
    p_s: float
    p1s: float
    n_idle: float
    t_rc: float
    t_coe: float


def window_size(i: int, backoff: BackoffParams) -> int:
    if i < 0 or i > backoff.max_stage:
        raise DomainError(f"stage {i} outside [0, {backoff.max_stage}]")
    return backoff.w0 * 2 ** min(i, backoff.m)


def failure_prob(tau: float, n: int, p_f: float) -> tuple[float, float]:
    """Collision probability ``p1`` and total per-attempt failure probability ``p``."""
    p1 = 1.0 - (1.0 - tau) ** (n - 1)
    p = p1 + p_f - p1 * p_f
    # rounding guard: exactly, max(p1, p_f) <= p <= 1
    return p1, min(1.0, max(p, p1, p_f))


def _doubling_sum(x: float, m: int) -> float:
    # sum_{k=0}^{m-1} x**k, finite at x = 1
    return math.fsum(x**k for k in range(m))


def _tau(p: float, backoff: BackoffParams) -> float:
    if backoff.persistent:
        # (1 - p) * sum_i p^i W_i / W, summed without the 1/(1 - 2p) factor;
        # tends to 2^m as p -> 1, which is the continuous limit used by the solver
        weighted = (1.0 - p) * _doubling_sum(2.0 * p, backoff.m) + (2.0 * p) ** backoff.m
        return 2.0 / (1.0 + backoff.w0 * weighted)
    stages = range(int(backoff.max_stage) + 1)
    powers = [p**i for i in stages]
    norm = math.fsum(pw * (window_size(i, backoff) + 1) for i, pw in zip(stages, powers))
    b00 = 2.0 / norm
    return b00 * math.fsum(powers)


def tau_of_p(p: float, backoff: BackoffParams) -> float:
    """Per-slot transmission probability of a station whose attempts fail w.p. ``p``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if backoff.persistent and p >= 1.0:
        raise DomainError("tau is undefined for persistent retransmission with p = 1")
    return _tau(p, backoff)


def tau_of_p_closed_form(p: float, backoff: BackoffParams) -> float:
    """Closed form of the transmission probability (singular at p = 1/2, 1)."""
    w, m = backoff.w0, backoff.m
    if backoff.persistent:
        return 2 * (1 - 2 * p) / ((1 - 2 * p) + w * (1 - p - p * (2 * p) ** m))
    f = backoff.f
    tail = 1 - p ** (m + f + 1)
    num = 2 * (1 - 2 * p) * tail
    den = (1 - 2 * p) * tail + w * (1 - p - p * (2 * p) ** m * (1 + p**f - 2 * p ** (1 + f)))
    return num / den


def tau_of_p_bianchi(p: float, w0: int, m: int) -> float:
    """The classical error-free, infinite-retry transmission probability."""
    return 2 * (1 - 2 * p) / ((1 - 2 * p) * (w0 + 1) + p * w0 * (1 - (2 * p) ** m))


def fixed_point_gap(tau: float, scenario: Scenario) -> float:
    """``g(tau) = tau - tau_of_p(p(tau))``; strictly increasing with a single root."""
    _, p = failure_prob(tau, scenario.n, scenario.p_f)
    return tau - _tau(p, scenario.backoff)


def solve_fixed_point(scenario: Scenario) -> FixedPointSolution:
    lo, hi = 0.0, 1.0
    g_lo, g_hi = fixed_point_gap(lo, scenario), fixed_point_gap(hi, scenario)
    if g_lo > 0 or g_hi < 0:
        raise ConvergenceError(f"root not bracketed: g(0)={g_lo}, g(1)={g_hi}")

    best, best_g = (lo, g_lo) if -g_lo <= g_hi else (hi, g_hi)
    iterations = 0
    while iterations < BISECTION_MAX_ITER and best_g != 0.0:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break  # bracket is two adjacent floats
        iterations += 1
        g_mid = fixed_point_gap(mid, scenario)
        if abs(g_mid) < abs(best_g):
            best, best_g = mid, g_mid
        if g_mid > 0:
            hi = mid
        else:
            lo = mid
    else:
        if best_g != 0.0:
            raise ConvergenceError(
                f"bisection did not converge in {BISECTION_MAX_ITER} steps "
                f"(bracket [{lo!r}, {hi!r}], |g|={abs(best_g)!r})"
            )

    residual = abs(best_g)
    if residual > RESIDUAL_TOL:
        raise ConvergenceError(f"residual {residual!r} exceeds {RESIDUAL_TOL} at tau={best!r}")
    p1, p = failure_prob(best, scenario.n, scenario.p_f)
    return FixedPointSolution(tau=best, p=p, p1=p1, residual=residual, iterations=iterations)


def chain_distribution(p: float, backoff: BackoffParams) -> ChainDistribution:
    """Stationary distribution ``b[i][k]`` of the (stage, timer) chain."""
    if backoff.persistent:
        raise DomainError("the stationary table is infinite for persistent retransmission")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    stages = range(int(backoff.max_stage) + 1)
    windows = [window_size(i, backoff) for i in stages]
    b00 = 2.0 / math.fsum(p**i * (w + 1) for i, w in zip(stages, windows))
    b = []
    for i, w in zip(stages, windows):
        k = np.arange(w)
        b.append((w - k) / w * (p**i * b00))
    return ChainDistribution(b=b, b00=b00)


def throughput(sol: FixedPointSolution, scenario: Scenario, times: ChannelTimes | None = None) -> float:
    """Fraction of channel time carrying successfully delivered payload."""
    times = times or scenario.times
    p_tr, p_s = _slot_probabilities(sol.tau, scenario.n)
    if p_tr == 0.0:
        return 0.0
    p_f = scenario.p_f
    sigma = scenario.timing.slot_sigma
    good = p_tr * p_s * (1 - p_f)
    busy = (
        (1 - p_tr) * sigma
        + good * times.t_s
        + p_tr * (1 - p_s) * times.t_c
        + p_tr * p_s * p_f * times.t_e
    )
    return good * times.payload_airtime / busy


def _slot_probabilities(tau: float, n: int) -> tuple[float, float]:
    p_tr = 1.0 - (1.0 - tau) ** n
    if p_tr == 0.0:
        return 0.0, 0.0
    return p_tr, n * tau * (1.0 - tau) ** (n - 1) / p_tr


def discard_probability(sol: FixedPointSolution, backoff: BackoffParams) -> float:
    if backoff.persistent:
        return 0.0
    return sol.p ** int(backoff.retry_limit)


def renewal_cycle(sol: FixedPointSolution, scenario: Scenario, times: ChannelTimes | None = None) -> RenewalCycle:
    times = times or scenario.times
    n, p_f, sigma = scenario.n, scenario.p_f, scenario.timing.slot_sigma
    tau, p, p1 = sol.tau, sol.p, sol.p1

    p1s = (n - 1) * tau * (1 - tau) ** (n - 2) / p1 if p1 > 0 else 0.0
    busy = p1s * (1 - p_f) * times.t_s + (1 - p1s) * times.t_c + p1s * p_f * times.t_e
    p1_t_rc = (1 - p1) * sigma + p1 * busy
    if p1 > 0:
        n_idle = 1.0 / p1 - 1.0
        t_rc = n_idle * sigma + busy
    else:
        n_idle = t_rc = math.inf
    t_coe = (p1 * times.t_c + (1 - p1) * p_f * times.t_e) / p if p > 0 else 0.0
    return RenewalCycle(p1s=p1s, n_idle=n_idle, t_rc=t_rc, t_coe=t_coe, p1_t_rc=p1_t_rc)


def stage_delay(i: int, backoff: BackoffParams, cycle: RenewalCycle) -> float:
    """Mean time from backoff start until the station's attempt from stage ``i``.

    Sum of the mean deferrals of stages ``0..i`` plus ``i`` own failed attempts.
    """
    windows = [window_size(k, backoff) for k in range(i + 1)]
    deferral = math.fsum((w - 1) / 2 * cycle.p1_t_rc for w in windows)
    return deferral + i * cycle.t_coe


def stage_delay_closed_form(i: int, backoff: BackoffParams, cycle: RenewalCycle) -> float:
    half = cycle.p1_t_rc / 2
    m = backoff.m
    if i <= m - 1:
        doubling = 2 ** (i + 1) - 1
    else:
        doubling = 2 ** (m + 1) - 1 + 2**m * (i - m)
    return i * cycle.t_coe - (i + 1) * half + half * backoff.w0 * doubling


def mean_delay(
    sol: FixedPointSolution,
    scenario: Scenario,
    times: ChannelTimes | None = None,
    conditional: bool = False,
) -> float:
    """Mean frame delay for a finite retry limit.

    By default each stage is weighted by ``(1 - p) p**i``; these weights sum to
    the delivery probability ``1 - p**(m+f+1)``. With ``conditional=True`` the
    weights are renormalised, giving the mean delay of delivered frames.
    """
    backoff = scenario.backoff
    if backoff.persistent:
        raise DomainError("use mean_delay_persistent for persistent retransmission")
    times = times or scenario.times
    cycle = renewal_cycle(sol, scenario, times)
    p = sol.p
    stages = range(int(backoff.retry_limit))
    if conditional:
        raw = [p**i for i in stages]
        total = math.fsum(raw)
        weights = [w / total for w in raw]
    else:
        weights = [(1 - p) * p**i for i in stages]
    return math.fsum(w * (stage_delay(i, backoff, cycle) + times.t_s) for i, w in zip(stages, weights))


def mean_delay_persistent(
    sol: FixedPointSolution,
    scenario: Scenario,
    times: ChannelTimes | None = None,
) -> float:
    """Mean frame delay when frames are retried until success."""
    if not scenario.backoff.persistent:
        raise DomainError("mean_delay_persistent requires persistent retransmission")
    p = sol.p
    if p >= 1 - 1e-12:
        raise DivergentDelayError(f"mean delay is unbounded at p = {p!r}")
    times = times or scenario.times
    cycle = renewal_cycle(sol, scenario, times)
    w0, m = scenario.backoff.w0, scenario.backoff.m
    half = cycle.p1_t_rc / 2
    # (1 - p - p(2p)^m) / ((1 - p)(1 - 2p)) without the removable pole at p = 1/2
    windows = _doubling_sum(2 * p, m) + (2 * p) ** m / (1 - p)
    return times.t_s + (cycle.t_coe * p - half) / (1 - p) + half * w0 * windows


def evaluate(scenario: Scenario, conditional: bool = False) -> PerfMetrics:
    """Solve the fixed point and compute every analytic measure.

    For persistent retransmission with certain failure the delay is reported as
    ``inf``.
    """
    times = scenario.times
    sol = solve_fixed_point(scenario)
    cycle = renewal_cycle(sol, scenario, times)
    p_tr, p_s = _slot_probabilities(sol.tau, scenario.n)
    if scenario.backoff.persistent:
        try:
            delay = mean_delay_persistent(sol, scenario, times)
        except DivergentDelayError:
            delay = math.inf
    else:
        delay = mean_delay(sol, scenario, times, conditional=conditional)
    return PerfMetrics(
        solution=sol,
        throughput=throughput(sol, scenario, times),
        delay_us=delay,
        discard_prob=discard_probability(sol, scenario.backoff),
        p_tr=p_tr,
        p_s=p_s,
        p1s=cycle.p1s,
        n_idle=cycle.n_idle,
        t_rc=cycle.t_rc,
        t_coe=cycle.t_coe,
    )
