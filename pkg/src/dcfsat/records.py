"""Output rows shared by the ``solve``, ``simulate`` and ``sweep`` commands."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields

from . import __version__
from .model import Scenario, evaluate
from .sim import SimResult

CSV_HEADER = (
    "mode,n,w0,m,f,pf,source,tau,p,p1,ptr,ps,throughput,delay_us,discard_prob,"
    "seed,reps,frames,ci95_throughput,ci95_delay_us,ci95_discard"
)
COLUMNS = tuple(CSV_HEADER.split(","))
PARAM_COLUMNS = COLUMNS[:7]


@dataclass(frozen=True)
class RunRecord:
    mode: str
    n: int
    w0: int
    m: int
    f: float
    pf: float
    source: str
    tau: float
    p: float
    p1: float
    ptr: float
    ps: float
    throughput: float
    delay_us: float
    discard_prob: float
    seed: int | None = None
    reps: int | None = None
    frames: int | None = None
    ci95_throughput: float | None = None
    ci95_delay_us: float | None = None
    ci95_discard: float | None = None


assert tuple(f.name for f in fields(RunRecord)) == COLUMNS


def analytic_record(scenario: Scenario, conditional: bool = False) -> RunRecord:
    metrics = evaluate(scenario, conditional=conditional)
    sol = metrics.solution
    b = scenario.backoff
    return RunRecord(
        mode=scenario.mode.value, n=scenario.n, w0=b.w0, m=b.m, f=b.f, pf=scenario.p_f,
        source="analytic", tau=sol.tau, p=sol.p, p1=sol.p1, ptr=metrics.p_tr, ps=metrics.p_s,
        throughput=metrics.throughput, delay_us=metrics.delay_us, discard_prob=metrics.discard_prob,
    )


def sim_record(result: SimResult) -> RunRecord:
    sc, cfg, est = result.scenario, result.config, result.estimates
    ci = result.ci95 or {}
    b = sc.backoff
    return RunRecord(
        mode=sc.mode.value, n=sc.n, w0=b.w0, m=b.m, f=b.f, pf=sc.p_f, source="sim",
        tau=est["tau_hat"], p=est["p_hat"], p1=est["p1_hat"], ptr=est["ptr_hat"], ps=est["ps_hat"],
        throughput=est["throughput_hat"], delay_us=est["delay_hat_us"], discard_prob=est["discard_hat"],
        seed=cfg.seed, reps=cfg.replications, frames=cfg.frames_target,
        ci95_throughput=ci.get("throughput_hat"), ci95_delay_us=ci.get("delay_hat_us"),
        ci95_discard=ci.get("discard_hat"),
    )


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return format_cell(value)
    return value


def comment_lines(config: dict, extra: dict | None = None) -> list[str]:
    """Provenance lines written ahead of CSV output, in a fixed order."""
    lines = [f"# dcfsat {__version__}"]
    for key, value in sorted((extra or {}).items()):
        lines.append(f"# {key}: {value}")
    effective = " ".join(f"{k}={format_cell(v)}" for k, v in sorted(config.items()))
    lines.append(f"# config: {effective}")
    return lines


def render_csv(records, config: dict, extra: dict | None = None, columns=COLUMNS) -> str:
    buf = io.StringIO()
    for line in comment_lines(config, extra):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        row = asdict(rec)
        writer.writerow([format_cell(row[c]) for c in columns])
    return buf.getvalue()


def render_json(records, config: dict, extra: dict | None = None, columns=COLUMNS) -> str:
    doc = {
        "version": __version__,
        **{k: _json_value(v) for k, v in sorted((extra or {}).items())},
        "config": {k: _json_value(v) for k, v in sorted(config.items())},
        "records": [{c: _json_value(asdict(r)[c]) for c in columns} for r in records],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_csv(text: str) -> list[dict]:
    """Read rows back from ``render_csv`` output as string dicts."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))
