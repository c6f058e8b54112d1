"""Slot-level Monte Carlo simulation of ``n`` saturated DCF stations.

Each loop iteration is one slot of the backoff chain. A station whose timer
reaches zero transmits; a slot with a single transmitter is a success unless
the channel corrupts the frame (probability ``p_f``), and a slot with two or
more transmitters is a collision. Every other station ticks its timer down by
one per slot, busy or idle. Runs of idle slots are skipped in one step, which
does not change the trajectory because idle slots draw no random numbers.

Random numbers come from numpy's PCG64, replication ``r`` seeded with
``seed + r``, and are handed to the compiled kernel in blocks. The kernel
draws one uniform for the channel error of a lone transmitter and then one per
transmitter (in station order) for its new backoff timer.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .model import DomainError, Scenario

GENERATOR_NAME = "numpy.random.PCG64"
_BLOCK = 1 << 16

# counter slots
IDLE, SUCCESS_SLOTS, COLLISION_SLOTS, ERROR_SLOTS = 0, 1, 2, 3
ATTEMPTS, COLLIDED_ATTEMPTS, SUCCESSES, DISCARDS, OUTCOMES, FRAMES_ADMITTED = 4, 5, 6, 7, 8, 9
_N_COUNTERS = 10
_STAGE_BINS_PERSISTENT = 64


@dataclass(frozen=True)
class SimConfig:
    seed: int = 1
    frames_target: int = 100_000
    warmup_frames: int = 1_000
    replications: int = 10

    def __post_init__(self):
        if not self.frames_target > self.warmup_frames >= 0:
            raise ValueError(
                f"need frames_target > warmup_frames >= 0, got {self.frames_target}, {self.warmup_frames}"
            )
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class StationState:
    stage: int
    timer: int
    frame_birth: float


@dataclass(frozen=True)
class ReplicationResult:
    seed: int
    tau_hat: float
    throughput_hat: float
    delay_hat_us: float
    discard_hat: float
    p_hat: float
    p1_hat: float
    ptr_hat: float
    ps_hat: float
    idle_slots: int
    success_slots: int
    collision_slots: int
    error_slots: int
    attempts: int
    successes: int
    discards: int
    frames_admitted: int
    elapsed_us: float
    stage_attempts: np.ndarray = field(repr=False)
    final_states: tuple = field(repr=False, default=())

    @property
    def slots(self) -> int:
        return self.idle_slots + self.success_slots + self.collision_slots + self.error_slots

    @property
    def completed(self) -> int:
        return self.successes + self.discards


ESTIMATES = ("tau_hat", "throughput_hat", "delay_hat_us", "discard_hat", "p_hat", "p1_hat", "ptr_hat", "ps_hat")


@dataclass(frozen=True)
class SimResult:
    """Pooled estimates over replications.

    ``ci95`` maps an estimate name to ``1.96 * s / sqrt(R)`` over replication
    means; it is ``None`` for a single replication.
    """

    scenario: Scenario
    config: SimConfig
    replications: list
    estimates: dict
    ci95: dict | None
    generator: str = GENERATOR_NAME

    def __getattr__(self, name):
        estimates = self.__dict__.get("estimates", {})
        if name in estimates:
            return estimates[name]
        raise AttributeError(name)

    @property
    def seed(self) -> int:
        return self.config.seed

    def count(self, name: str) -> int:
        return sum(getattr(r, name) for r in self.replications)

    @property
    def elapsed_us(self) -> float:
        return math.fsum(r.elapsed_us for r in self.replications)

    def stage_fractions(self) -> np.ndarray:
        """Share of attempts made from each backoff stage, pooled."""
        total = sum(r.stage_attempts for r in self.replications)
        return total / total.sum()


@numba.njit(cache=True)
def _run_kernel(stage, timer, birth, counters, snap, stage_attempts, delay_acc, warm,
                n, w0, m, max_stage, p_f, sigma, t_s, t_c, t_e, frames_target, warmup, u, upos):
    """Advance the stations until ``frames_target`` outcomes or the buffer runs low.

    Returns ``(upos, warm, done)``.
    """
    n_bins = stage_attempts.shape[0]
    while counters[OUTCOMES] < frames_target:
        if u.shape[0] - upos < n + 1:
            return upos, warm, False

        kmin = timer[0]
        for j in range(1, n):
            if timer[j] < kmin:
                kmin = timer[j]
        if kmin > 0:
            counters[IDLE] += kmin
            for j in range(n):
                timer[j] -= kmin

        ntx = 0
        for j in range(n):
            if timer[j] == 0:
                ntx += 1
        counters[ATTEMPTS] += ntx
        if warm:
            for j in range(n):
                if timer[j] == 0:
                    stage_attempts[min(stage[j], n_bins - 1)] += 1

        success = False
        if ntx == 1:
            if u[upos] < p_f:
                counters[ERROR_SLOTS] += 1
            else:
                counters[SUCCESS_SLOTS] += 1
                success = True
            upos += 1
        else:
            counters[COLLISION_SLOTS] += 1
            counters[COLLIDED_ATTEMPTS] += ntx
        clock = (counters[IDLE] * sigma + counters[SUCCESS_SLOTS] * t_s
                 + counters[COLLISION_SLOTS] * t_c + counters[ERROR_SLOTS] * t_e)

        for j in range(n):
            if timer[j] != 0:
                timer[j] -= 1
                continue
            if success:
                counters[SUCCESSES] += 1
                counters[OUTCOMES] += 1
                counters[FRAMES_ADMITTED] += 1
                if warm:
                    d = clock - birth[j]
                    delay_acc[0] += d
                    delay_acc[1] += d * d
                stage[j] = 0
                birth[j] = clock
            elif max_stage >= 0 and stage[j] >= max_stage:
                counters[DISCARDS] += 1
                counters[OUTCOMES] += 1
                counters[FRAMES_ADMITTED] += 1
                stage[j] = 0
                birth[j] = clock
            else:
                stage[j] += 1
            window = w0 << min(stage[j], m)
            timer[j] = int(u[upos] * window)
            upos += 1

        if not warm and counters[OUTCOMES] >= warmup:
            warm = True
            for k in range(counters.shape[0]):
                snap[k] = counters[k]
            delay_acc[2] = clock
    return upos, warm, True


def _check_simulable(scenario: Scenario) -> None:
    if scenario.backoff.persistent and scenario.p_f >= 1.0:
        raise DomainError("no frame ever completes with persistent retransmission and p_f = 1")


def run_replication(scenario: Scenario, seed: int, frames_target: int, warmup_frames: int) -> ReplicationResult:
    """One independent run; the first ``warmup_frames`` outcomes are not measured."""
    _check_simulable(scenario)
    backoff = scenario.backoff
    times = scenario.times
    n = scenario.n
    rng = np.random.Generator(np.random.PCG64(seed))

    stage = np.zeros(n, dtype=np.int64)
    timer = (rng.random(n) * backoff.w0).astype(np.int64)
    u = rng.random(_BLOCK)
    upos = 0
    birth = np.zeros(n)
    counters = np.zeros(_N_COUNTERS, dtype=np.int64)
    counters[FRAMES_ADMITTED] = n
    snap = np.zeros(_N_COUNTERS, dtype=np.int64)
    bins = _STAGE_BINS_PERSISTENT if backoff.persistent else int(backoff.max_stage) + 1
    stage_attempts = np.zeros(bins, dtype=np.int64)
    delay_acc = np.zeros(3)  # sum, sum of squares, clock at end of warmup
    max_stage = -1 if backoff.persistent else int(backoff.max_stage)
    warm = warmup_frames == 0

    while True:
        upos, warm, done = _run_kernel(
            stage, timer, birth, counters, snap, stage_attempts, delay_acc, warm,
            n, backoff.w0, backoff.m, max_stage, scenario.p_f, scenario.timing.slot_sigma,
            times.t_s, times.t_c, times.t_e, frames_target, warmup_frames, u, upos,
        )
        if done:
            break
        u = np.concatenate([u[upos:], rng.random(_BLOCK)])
        upos = 0

    c = counters - snap
    successes, discards = int(c[SUCCESSES]), int(c[DISCARDS])
    if successes + discards == 0:
        raise RuntimeError("no completed frames after warmup; increase frames_target")
    clock = (counters[IDLE] * scenario.timing.slot_sigma + counters[SUCCESS_SLOTS] * times.t_s
             + counters[COLLISION_SLOTS] * times.t_c + counters[ERROR_SLOTS] * times.t_e)
    elapsed = clock - delay_acc[2]
    slots = int(c[IDLE] + c[SUCCESS_SLOTS] + c[COLLISION_SLOTS] + c[ERROR_SLOTS])
    busy = slots - int(c[IDLE])
    attempts = int(c[ATTEMPTS])
    return ReplicationResult(
        seed=seed,
        tau_hat=attempts / (n * slots),
        throughput_hat=successes * times.payload_airtime / elapsed,
        delay_hat_us=delay_acc[0] / successes if successes else math.nan,
        discard_hat=discards / (successes + discards),
        p_hat=(int(c[COLLIDED_ATTEMPTS]) + int(c[ERROR_SLOTS])) / attempts,
        p1_hat=int(c[COLLIDED_ATTEMPTS]) / attempts,
        ptr_hat=busy / slots,
        ps_hat=(int(c[SUCCESS_SLOTS]) + int(c[ERROR_SLOTS])) / busy,
        idle_slots=int(c[IDLE]),
        success_slots=int(c[SUCCESS_SLOTS]),
        collision_slots=int(c[COLLISION_SLOTS]),
        error_slots=int(c[ERROR_SLOTS]),
        attempts=attempts,
        successes=successes,
        discards=discards,
        frames_admitted=int(c[FRAMES_ADMITTED]),
        elapsed_us=float(elapsed),
        stage_attempts=stage_attempts,
        final_states=tuple(
            StationState(int(s), int(t), float(b)) for s, t, b in zip(stage, timer, birth)
        ),
    )


def _run_one(args):
    return run_replication(*args)


def replicate_and_pool(scenario: Scenario, cfg: SimConfig, jobs: int = 1) -> SimResult:
    """Run ``cfg.replications`` independent replications and pool them.

    Results are ordered by replication index whatever the execution order, so
    the output depends only on ``(scenario, cfg)``.
    """
    _check_simulable(scenario)
    tasks = [(scenario, cfg.seed + r, cfg.frames_target, cfg.warmup_frames) for r in range(cfg.replications)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reps = list(pool.map(_run_one, tasks))
    else:
        reps = [_run_one(t) for t in tasks]

    estimates, ci95 = {}, ({} if len(reps) > 1 else None)
    for name in ESTIMATES:
        values = np.array([getattr(r, name) for r in reps], dtype=float)
        estimates[name] = float(values.mean())
        if ci95 is not None:
            ci95[name] = float(1.96 * values.std(ddof=1) / math.sqrt(len(values)))
    return SimResult(scenario=scenario, config=cfg, replications=reps, estimates=estimates, ci95=ci95)


def simulate(scenario: Scenario, cfg: SimConfig | None = None, jobs: int = 1) -> SimResult:
    return replicate_and_pool(scenario, cfg or SimConfig(), jobs=jobs)
