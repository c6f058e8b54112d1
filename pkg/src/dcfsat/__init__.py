"""Saturation throughput, delay and discard analysis of IEEE 802.11 DCF over
an error-prone channel, with a slot-level simulator to check it."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    PERSISTENT,
    BackoffParams,
    ChainDistribution,
    ConvergenceError,
    DivergentDelayError,
    DomainError,
    FixedPointSolution,
    PerfMetrics,
    RenewalCycle,
    Scenario,
    chain_distribution,
    discard_probability,
    evaluate,
    failure_prob,
    mean_delay,
    mean_delay_persistent,
    renewal_cycle,
    solve_fixed_point,
    tau_of_p,
    throughput,
    window_size,
)
from .sim import SimConfig, SimResult, replicate_and_pool, simulate  # noqa: E402
from .timing import AccessMode, ChannelTimes, MacTimingParams, channel_times, frame_airtime, phy_overhead  # noqa: E402
