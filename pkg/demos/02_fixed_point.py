"""Solve for the per-slot transmission probability and read off the metrics.

Run: python demos/02_fixed_point.py
"""
from dcfsat import PERSISTENT, BackoffParams, Scenario, evaluate, solve_fixed_point, tau_of_p

backoff = BackoffParams(w0=8, m=5, f=10)

# tau(p) falls as attempts fail more often; at p = 1 every stage is visited once
for p in (0.0, 0.25, 0.5, 0.75, 1.0):
    print(f"p = {p:4.2f} -> tau = {tau_of_p(p, backoff):.6f}")

sc = Scenario(n=30, p_f=0.1, backoff=backoff)
sol = solve_fixed_point(sc)
print(f"\nn=30, pf=0.1: tau={sol.tau:.12f} p={sol.p:.12f} p1={sol.p1:.12f}")
print(f"bisection steps {sol.iterations}, residual {sol.residual:.1e}")

for mode in ("basic", "rtscts"):
    m = evaluate(Scenario(30, 0.1, backoff, mode))
    c = evaluate(Scenario(30, 0.1, backoff, mode), conditional=True)
    print(f"{mode:>7}: S={m.throughput:.4f}  P_D={m.discard_prob:.2e}  "
          f"T_d={m.delay_us / 1000:.2f} ms (delivered frames only: {c.delay_us / 1000:.2f} ms)")

# retrying forever removes discards but the delay keeps growing with contention
for n in (5, 20, 50):
    m = evaluate(Scenario(n, 0.0, BackoffParams(8, 5, PERSISTENT)))
    print(f"persistent, n={n:2d}: S={m.throughput:.4f} T_d={m.delay_us / 1000:.2f} ms")
