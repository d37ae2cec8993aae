"""How often does each scheme need more power than the PBS has?

Neutralization cancels the whole interference vector, orthogonal steering
only its in-phase part and DIS never spends more than the PBS budget.
"""
from steersim import SweepSpec, prob_overhead

spec = SweepSpec(
    axes={"xi": [0.1, 1.0, 10.0], "n_interferences": [1, 2]},
    schemes=["IN", "OIS", "DIS"],
    drops_per_point=2000,
    master_seed=7,
)
report = prob_overhead(spec)

print("Prob(overhead > PBS power)")
print(f"{'xi':>6}{'N':>3}{'IN':>8}{'OIS':>8}{'DIS':>8}")
p = {(r.xi, r.n_interferences, r.scheme): r.prob_overhead_exceeds for r in report.rows}
for xi in spec.axes["xi"]:
    for n in (1, 2):
        print(f"{xi:>6g}{n:>3}" + "".join(f"{p[(xi, n, s)]:>8.3f}" for s in ("IN", "OIS", "DIS")))

print("\nOIS at xi = 1: Prob(overhead / PBS power > P)")
for c in report.curve:
    if c.scheme == "OIS" and c.xi == 1.0 and c.p_bar in (0.25, 0.5, 0.75, 1.0, 1.5):
        print(f"  N={c.n_interferences}  P={c.p_bar:<5g} {c.prob_exceeds:.3f}")
