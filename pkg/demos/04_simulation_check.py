"""Check the analysis against the slot-level simulator.

Run: python demos/04_simulation_check.py        (about 5 s)
"""
from dcfsat import BackoffParams, Scenario, SimConfig, evaluate, simulate
from dcfsat.validate import default_grid, validate

# one point in detail
sc = Scenario(n=30, p_f=0.1, backoff=BackoffParams(8, 5, 10))
res = simulate(sc, SimConfig(seed=7, replications=10))
ana = evaluate(sc, conditional=True)
print(f"tau  sim {res.tau_hat:.5f} +- {res.ci95['tau_hat']:.5f}  analytic {ana.solution.tau:.5f}")
print(f"S    sim {res.throughput_hat:.5f} +- {res.ci95['throughput_hat']:.5f}  analytic {ana.throughput:.5f}")
print(f"P_D  sim {res.discard_hat:.5f} +- {res.ci95['discard_hat']:.5f}  analytic {ana.discard_prob:.5f}")
print(f"T_d  sim {res.delay_hat_us:.0f} +- {res.ci95['delay_hat_us']:.0f} us  analytic {ana.delay_us:.0f} us")

# stage shares of attempts follow the truncated geometric law in p
p, k = ana.solution.p, int(sc.backoff.retry_limit)
for i, share in enumerate(res.stage_fractions()[:6]):
    print(f"  stage {i}: {share:.4f} of attempts, law gives {(1 - p) * p**i / (1 - p**k):.4f}")

# the whole grid
report = validate(default_grid(Scenario(n=2)), SimConfig(seed=1, frames_target=101_000))
print()
print(report.to_text())
