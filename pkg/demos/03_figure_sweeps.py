"""Regenerate the data behind the throughput, delay and discard curves.

Writes one CSV per preset next to this script; plot them with any tool.
Run: python demos/03_figure_sweeps.py
"""
from pathlib import Path

from dcfsat.records import render_csv
from dcfsat.sweep import preset, run_sweep

here = Path(__file__).parent
for name in ("fig2", "fig3", "fig4"):
    spec = preset(name)
    records = run_sweep(spec)
    path = here / f"{name}.csv"
    path.write_text(render_csv(records, {"preset": name}))
    print(f"{name}: {len(records)} rows over {spec.axis} -> {path.name}")

# the discard curves of the two access modes lie on top of each other
records = run_sweep(preset("fig3"))
basic = [r.discard_prob for r in records if r.mode == "basic"]
rts = [r.discard_prob for r in records if r.mode == "rtscts"]
print("fig3 discard columns identical across modes:", basic == rts)

# throughput against n with retries until success
for r in run_sweep(preset("fig2")):
    if r.n in (2, 5, 10, 20, 50):
        print(f"  {r.mode:>7} n={r.n:2d} S={r.throughput:.4f}")
