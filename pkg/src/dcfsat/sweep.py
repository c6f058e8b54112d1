"""Parameter sweeps over ``n``, ``p_f`` or ``f``, including the figure presets.

The presets reconstruct the data behind the throughput/delay/discard figures;
their grids are chosen here, not published values.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import PERSISTENT, DomainError, Scenario
from .records import RunRecord, analytic_record, sim_record
from .sim import SimConfig, simulate
from .timing import AccessMode

AXES = ("n", "p_f", "f")
SOURCES = ("analytic", "sim")
_MODE_ORDER = {AccessMode.BASIC: 0, AccessMode.RTSCTS: 1}


@dataclass(frozen=True)
class SweepSpec:
    """One swept axis over a fixed base scenario.

    ``series`` holds curve parameters (e.g. two ``p_f`` values, one curve each);
    every combination of series values is crossed with every axis value.
    """

    axis: str
    values: tuple
    fixed: Scenario
    series: dict = field(default_factory=dict)
    modes: tuple = (AccessMode.BASIC, AccessMode.RTSCTS)
    sources: tuple = ("analytic",)
    outputs: tuple | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        for key in self.series:
            if key not in AXES or key == self.axis:
                raise ValueError(f"invalid series parameter {key!r}")
        for src in self.sources:
            if src not in SOURCES:
                raise ValueError(f"unknown source {src!r}")
        list(self.scenarios())  # fail fast on out-of-domain values

    def scenarios(self):
        """Scenarios in output order: axis value, then series values, then mode."""
        keys = list(self.series)
        for value in sorted(self.values):
            for combo in itertools.product(*(self.series[k] for k in keys)):
                point = dict(zip(keys, combo))
                point[self.axis] = value
                for mode in sorted((AccessMode.parse(m) for m in self.modes), key=_MODE_ORDER.get):
                    yield with_params(self.fixed, mode=mode, **point)


def with_params(base: Scenario, **changes) -> Scenario:
    """Copy of ``base`` with any of n, p_f, f, w0, m, mode replaced."""
    backoff = base.backoff
    bkw = {k: changes.pop(k) for k in ("w0", "m", "f") if k in changes}
    if bkw:
        backoff = dataclasses.replace(backoff, **bkw)
    return dataclasses.replace(base, backoff=backoff, **changes)


def preset(name: str, base: Scenario | None = None, sources=("analytic",)) -> SweepSpec:
    base = base or Scenario(n=30)
    if name == "fig2":
        # throughput and delay against n, error-free, retry until success
        fixed = with_params(base, p_f=0.0, f=PERSISTENT)
        return SweepSpec("n", tuple(range(2, 51)), fixed, sources=tuple(sources))
    if name == "fig3":
        fixed = with_params(base, n=30)
        return SweepSpec("f", tuple(range(0, 21)), fixed, series={"p_f": (0.1, 0.5)}, sources=tuple(sources))
    if name == "fig4":
        fixed = with_params(base, n=30)
        grid = tuple(float(x) for x in np.logspace(-2, 0, 25))
        return SweepSpec("p_f", grid, fixed, series={"f": (1, 10)}, sources=tuple(sources))
    raise ValueError(f"unknown preset {name!r} (expected fig2, fig3 or fig4)")


PRESETS = ("fig2", "fig3", "fig4")


def _evaluate_point(task) -> list[RunRecord]:
    scenario, sources, cfg, conditional = task
    rows = []
    for src in SOURCES:
        if src not in sources:
            continue
        if src == "analytic":
            rows.append(analytic_record(scenario, conditional=conditional))
        else:
            rows.append(sim_record(simulate(scenario, cfg)))
    return rows


def run_sweep(spec: SweepSpec, cfg: SimConfig | None = None, conditional: bool = False, jobs: int = 1) -> list[RunRecord]:
    """Evaluate every point of ``spec``; rows come back in deterministic order."""
    cfg = cfg or SimConfig()
    tasks = [(sc, spec.sources, cfg, conditional) for sc in spec.scenarios()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_evaluate_point, tasks))
    else:
        chunks = [_evaluate_point(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def parse_values(axis: str, text: str) -> tuple:
    """Parse ``a,b,c``, ``start:stop:step`` (inclusive) or ``log:start:stop:count``."""
    text = text.strip()
    if text.startswith("log:"):
        if axis != "p_f":
            raise ValueError("log spacing is only supported for p_f")
        _, start, stop, count = text.split(":")
        values = np.logspace(math.log10(float(start)), math.log10(float(stop)), int(count))
        return tuple(float(v) for v in values)
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("range step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(_cast_axis(axis, start + i * step) for i in range(count))
    return tuple(_cast_axis(axis, v) for v in text.split(",") if v.strip())


def _cast_axis(axis, value):
    if axis == "f":
        return parse_f(value)
    if axis == "n":
        v = float(value)
        if not v.is_integer():
            raise DomainError(f"n must be an integer, got {value}")
        return int(v)
    return float(value)


def parse_f(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "persistent"):
        return PERSISTENT
    v = float(value)
    if math.isinf(v):
        return PERSISTENT
    if not v.is_integer():
        raise DomainError(f"f must be an integer or 'inf', got {value}")
    return int(v)
