"""Acceptance criteria, each at its stated tolerance.

Every test prints ``criterion N: PASS|FAIL  <detail>`` and the lines are
repeated in the pytest terminal summary. Run alone with
``pytest tests/test_acceptance.py -v``.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from steersim import cli, experiment, oracles
from steersim.channel import (
    Antennas,
    Deployment,
    budget_from_deployment,
    budget_normalized,
    linear_to_db,
    path_loss_pbs,
    seeded_drop,
)
from steersim.experiment import SweepSpec, evaluate_scheme, point_drop, prob_overhead, run_sweep
from steersim.schemes import Fallback, in_scheme, mf, steer, steering_table
from steersim.steering import (
    RhoCoefficients,
    TwoInterferenceObjective,
    dis_joint_n2,
    dis_multi_interference,
    dis_multi_stream,
    joint_rho_n2,
    optimal_rho,
    sinr_dis,
)

SEED = 20_251_017
GAMMAS = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
XIS = [0.1, 1.0, 10.0, 100.0]

pytestmark = pytest.mark.slow


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pooled(*se) -> float:
    return math.sqrt(sum(s * s for s in se))


def mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return math.fsum(x.tolist()) / x.size, float(np.std(x, ddof=1) / math.sqrt(x.size))


# --- 1 and 2: closed form ---------------------------------------------------

@pytest.fixture(scope="module")
def closed_form_sample():
    """optimal_rho vs a 1e-4 grid on 1000 drops per (gamma, xi) point."""
    t0 = time.perf_counter()
    worst, misses, roots = 0.0, 0, []
    for i, gamma in enumerate([0.0, 5.0, 10.0, 20.0, 30.0]):
        for j, xi in enumerate(XIS):
            budget = budget_normalized(gamma, xi)
            for k in range(1000):
                d = seeded_drop(budget, SEED, 10 * i + j, k)
                sol = optimal_rho(d)
                t = steering_table(d)
                coeffs = RhoCoefficients.from_terms(t.budgets[0], t.q[0], t.lam2[0], t.g2[0, 0],
                                                    t.chi2[0, 0], d.budget.sigma2)
                ref = oracles.grid_argmax_rho(lambda r: sinr_dis(coeffs, r), sol.rho_max)
                err = abs(sol.rho_star - ref)
                worst = max(worst, err)
                misses += err > 1e-3
                roots.append((t.chi2[0, 0] > 0, sol))
    return worst, misses, roots, time.perf_counter() - t0


def test_criterion_01_closed_form_optimality(closed_form_sample):
    worst, misses, roots, elapsed = closed_form_sample
    ok = misses == 0 and elapsed < 60.0
    report(1, ok, f"{len(roots)} drops, max |rho* - grid argmax| = {worst:.2e}, "
                  f"{misses} beyond 1e-3, {elapsed:.1f} s")
    assert ok


def test_criterion_02_root_rejection(closed_form_sample):
    _, _, roots, _ = closed_form_sample
    checked = [sol for chi_nonzero, sol in roots if chi_nonzero and not math.isnan(sol.delta)]
    violations = sum(not (sol.delta > 0 and sol.rho_plus > sol.rho_max) for sol in checked)
    skipped = sum(chi for chi, _ in roots) - len(checked)
    ok = violations == 0 and skipped == 0
    report(2, ok, f"{len(checked)} drops with chi != 0, {violations} violations of delta > 0 and "
                  f"rho+ > rho_max, {skipped} treated as degenerate")
    assert ok


# --- 3 and 4: mean steering factor ------------------------------------------

def test_criterion_03_mean_rho_star_anchor():
    spec = SweepSpec(axes={"gamma_bar_db": [5.0], "xi": [100.0]}, schemes=["DIS"],
                     drops_per_point=10_000, master_seed=SEED)
    (row,) = run_sweep(spec)
    ok = abs(row.mean_rho_star - 0.90) <= 0.05
    report(3, ok, f"mean rho* = {row.mean_rho_star:.4f} over {row.n_drops} drops (target 0.90 +/- 0.05)")
    assert ok


def test_criterion_04_mean_rho_star_grows_with_gamma():
    n = 5000
    failures, summary = [], []
    for j, xi in enumerate(XIS):
        stats = []
        for i, gamma in enumerate(GAMMAS):
            budget = budget_normalized(gamma, xi)
            rhos = [optimal_rho(seeded_drop(budget, SEED + 4, 10 * i + j, k)).rho_star for k in range(n)]
            stats.append(mean_se(rhos))
        for g0, g1, (m0, s0), (m1, s1) in zip(GAMMAS, GAMMAS[1:], stats, stats[1:]):
            if m1 < m0 - pooled(s0, s1):
                failures.append(f"xi={xi:g}: {g0:g}->{g1:g} dB drops {m0:.4f}->{m1:.4f}")
        summary.append(f"xi={xi:g}: " + "/".join(f"{m:.3f}" for m, _ in stats))
    ok = not failures
    report(4, ok, f"{n} drops per point; " + "; ".join(failures or summary))
    assert ok


# --- 5: scheme ordering -------------------------------------------------------

SCHEMES_5 = ["DIS", "OIS", "IS_FIXED:0.3", "IS_FIXED:0.6", "IN", "ZF", "ZFBF", "MF"]
ORDER_5 = [("DIS", "OIS"), ("OIS", "IS_FIXED:0.3"), ("OIS", "IS_FIXED:0.6"),
           ("DIS", "IN"), ("IN", "ZF"), ("ZF", "ZFBF")]


def test_criterion_05_scheme_ordering():
    n = 10_000
    spec = SweepSpec(axes={"gamma_bar_db": GAMMAS, "xi": [1.0]}, schemes=SCHEMES_5,
                     drops_per_point=n, master_seed=SEED + 5, fallback="zf")
    failures, exact_violations, exact_checked = [], 0, 0
    for p, point in enumerate(spec.channel_points()):
        se = {s: np.empty(n) for s in SCHEMES_5}
        for k in range(n):
            d = point_drop(spec, p, k, point)
            res = {}
            for label, name, rho in spec.scheme_columns(None):
                res[label] = evaluate_scheme(d, name, rho, Fallback.ZF)
                se[label][k] = res[label].se_bits
            if res["OIS"].feasible:
                exact_checked += 1
                exact_violations += res["DIS"].se_bits < max(res["OIS"].se_bits, mf(d).se_bits)
        stats = {s: mean_se(v) for s, v in se.items()}
        for hi, lo in ORDER_5:
            (m_hi, s_hi), (m_lo, s_lo) = stats[hi], stats[lo]
            if m_hi < m_lo - pooled(s_hi, s_lo):
                failures.append(f"{point['gamma_bar_db']:g} dB: {hi} {m_hi:.4f} < {lo} {m_lo:.4f} "
                                f"(pooled SE {pooled(s_hi, s_lo):.4f})")
    ok = not failures and exact_violations == 0
    detail = (f"{n} drops per point; per-drop DIS >= max(OIS, MF) violated {exact_violations}/{exact_checked}; "
              + ("all orderings hold" if not failures else "; ".join(failures)))
    report(5, ok, detail)
    assert ok


# --- 6: overhead exceedance ---------------------------------------------------

def test_criterion_06_overhead_exceedance_ordering():
    n = 10_000
    spec = SweepSpec(axes={"gamma_bar_db": [5.0], "xi": [0.1, 0.3, 1.0, 3.0, 10.0], "n_interferences": [1, 2]},
                     schemes=["IN", "OIS", "DIS"], drops_per_point=n, master_seed=SEED + 6)
    rows = prob_overhead(spec).rows
    p = {(r.xi, r.n_interferences, r.scheme): r.prob_overhead_exceeds for r in rows}

    def se(q):
        return math.sqrt(q * (1 - q) / n)

    failures = []
    for xi in spec.axes["xi"]:
        for N in (1, 2):
            chain = [p[(xi, N, s)] for s in ("IN", "OIS", "DIS")]
            for a, b, names in zip(chain, chain[1:], ("IN>=OIS", "OIS>=DIS")):
                if a < b - pooled(se(a), se(b)):
                    failures.append(f"xi={xi:g} N={N}: {names} fails ({a:.4f} vs {b:.4f})")
        a, b = p[(xi, 2, "IN")], p[(xi, 1, "IN")]
        if a < b - pooled(se(a), se(b)):
            failures.append(f"xi={xi:g}: IN N=2 {a:.4f} < N=1 {b:.4f}")
    ok = not failures
    detail = "; ".join(failures) if failures else ", ".join(
        f"xi={xi:g}: IN {p[(xi, 1, 'IN')]:.3f}/{p[(xi, 2, 'IN')]:.3f} OIS {p[(xi, 1, 'OIS')]:.3f}/"
        f"{p[(xi, 2, 'OIS')]:.3f} DIS {p[(xi, 1, 'DIS')]:.3f}" for xi in spec.axes["xi"])
    report(6, ok, f"{n} drops per point (N=1/N=2); {detail}")
    assert ok


# --- 7: antenna trends ------------------------------------------------------

def _dis_stats(axes, n):
    spec = SweepSpec(axes={"gamma_bar_db": [5.0], "xi": [1.0], **axes}, schemes=["DIS"],
                     drops_per_point=n, master_seed=SEED + 7)
    out = []
    for p, point in enumerate(spec.channel_points()):
        se, rho = np.empty(n), np.empty(n)
        for k in range(n):
            r = evaluate_scheme(point_drop(spec, p, k, point), "DIS", None, spec.effective_fallback)
            se[k], rho[k] = r.se_bits, r.rho
        out.append((mean_se(se), mean_se(rho)))
    return out


def test_criterion_07_antenna_trends():
    n = 10_000
    failures = []
    for label, axes in [("N_T0", {"n_t0": [2, 3, 4, 5, 6]}),
                        ("N_R0 (N_T0=4)", {"n_t0": [4], "n_r0": [2, 3, 4]})]:
        stats = _dis_stats(axes, n)
        for (se0, r0), (se1, r1) in zip(stats, stats[1:]):
            for what, (m0, s0), (m1, s1) in (("SE", se0, se1), ("rho*", r0, r1)):
                if m1 < m0 - pooled(s0, s1):
                    failures.append(f"{label}: mean {what} drops {m0:.4f}->{m1:.4f}")
    t1 = _dis_stats({"n_t1": [2, 3, 4, 5, 6]}, n)
    ses = [s[0][0] for s in t1]
    spread = (max(ses) - min(ses)) / min(ses)
    if spread > 0.05:
        failures.append(f"N_T1: SE spread {spread:.1%}")
    ok = not failures
    report(7, ok, f"{n} drops per point; N_T1 SE spread {spread:.2%}; "
                  + ("; ".join(failures) if failures else "SE and rho* nondecreasing in N_T0 and N_R0"))
    assert ok


# --- 8: deployment ------------------------------------------------------------

def test_criterion_08_cell_edge_effective_power():
    b = budget_from_deployment(Deployment(p0_dbm=23.0, eta0_m=300.0), sigma2_dbm=-104.0)
    p0e_dbm = linear_to_db(b.p0e)
    ok = abs(p0e_dbm - (-89.3)) <= 0.5
    report(8, ok, f"P0e at 300 m = {p0e_dbm:.2f} dBm (path loss {path_loss_pbs(300.0):.2f} dB)")
    assert ok


# --- 9: reconstruction oracles ----------------------------------------------

def test_criterion_09_reconstruction_oracles():
    worst_se, worst_ois, worst_in, count, unaffordable = 0.0, 0.0, 0.0, 0, 0
    budget = budget_normalized(10.0, 1.0)
    for k in range(1000):
        d = seeded_drop(budget, SEED + 9, 0, k)
        for rho in (0.25, 0.5, 0.75, 1.0):
            res, fits = steer(d, rho)
            ref = oracles.assemble_steering(d, rho)
            if fits:
                worst_se = max(worst_se, abs(res.se_bits - ref["se"]) / ref["se"])
                count += 1
            else:
                unaffordable += 1
            if rho == 1.0:
                i_norm = math.sqrt(d.budget.p1e) * np.linalg.norm(d.interference_vectors[:, 0])
                in_phase = abs(np.vdot(ref["filters"][:, 0], ref["coefficients"][0]))
                worst_ois = max(worst_ois, in_phase / i_norm)
        if in_scheme(d).feasible:
            worst_in = max(worst_in, float(np.max(oracles.assemble_neutralization(d)["post_filter"])))
    # Several streams and several interference terms.
    ant = Antennas(4, 3, 3)
    for k in range(200):
        cases = []
        d = seeded_drop(budget, SEED + 9, 1, k, ant, n_streams_mbs=2, n_streams_pbs=2)
        R = np.array([[0.25, 0.75], [1.0, 0.5]])
        cases.append((d, steer(d, R)[0], R))
        d = seeded_drop(budget, SEED + 9, 2, k, ant, n_streams_mbs=1, n_streams_pbs=3)
        res = dis_multi_stream(d)
        cases.append((d, res, np.array(res.rhos).reshape(3, 1)))
        d = seeded_drop(budget, SEED + 9, 3, k, n_streams_mbs=2)
        res = dis_multi_interference(d)
        cases.append((d, res, np.array(res.rhos).reshape(1, 2)))
        for d, res, R in cases:
            ref = oracles.assemble_steering(d, R)["se"]
            worst_se = max(worst_se, abs(res.se_bits - ref) / ref)
            count += 1
    ok = worst_se <= 1e-9 and worst_ois <= 1e-9 and worst_in <= 1e-15
    report(9, ok, f"{count} comparisons ({unaffordable} unaffordable factors skipped): "
                  f"max relative SE error {worst_se:.2e}, "
                  f"OIS in-phase residual {worst_ois:.2e} x |i|, IN residual {worst_in:.2e}")
    assert ok


# --- 10: joint optimization for two interferences -----------------------------

def test_criterion_10_joint_two_interference():
    combos = [(g, xi) for g in (0.0, 10.0, 20.0, 30.0) for xi in (0.1, 1.0, 10.0, 100.0)]
    worst, under, misses = 0.0, 0, 0
    for k in range(200):
        gamma, xi = combos[k % len(combos)]
        d = seeded_drop(budget_normalized(gamma, xi), SEED + 10, 0, k, n_streams_mbs=2)
        obj = TwoInterferenceObjective.from_drop(d)
        j = joint_rho_n2(d)
        g = oracles.grid_argmax_2d(obj.a, obj.b, obj.e, obj.s2)
        err = max(abs(j.rho1 - g[0]), abs(j.rho2 - g[1]))
        worst = max(worst, err)
        misses += err > 1e-3
        under += dis_joint_n2(d).se_bits < dis_multi_interference(d).se_bits
    ok = misses == 0 and under == 0
    report(10, ok, f"200 drops: max coordinate gap to 1e-3 grid {worst:.2e} ({misses} beyond 1e-3), "
                   f"{under} drops where joint < independent")
    assert ok


# --- 11: determinism ---------------------------------------------------------

def test_criterion_11_thread_count_independence(tmp_path, monkeypatch):
    monkeypatch.setattr(experiment, "CHUNK_DROPS", 50)
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("gamma_bar_db = 0, 15, 30\nxi = 0.1, 10\nn_interferences = 1, 2\n"
                   "schemes = MF, ZF, ZFBF, IN, OIS, IS_FIXED:0.5, DIS\n"
                   "drops_per_point = 200\nmaster_seed = 987654321987654321\n")
    outs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}.csv"
        assert cli.main(["sweep", "--config", str(cfg), "--out", str(out), "--threads", threads]) == 0
        outs.append(out.read_bytes())
    rerun = tmp_path / "again.csv"
    cli.main(["sweep", "--config", str(cfg), "--out", str(rerun), "--threads", "2"])
    ok = outs[0] == outs[1] == rerun.read_bytes()
    n_rows = len(outs[0].splitlines()) - 1
    report(11, ok, f"1, 2 and 4 workers: {'byte-identical' if ok else 'DIFFERENT'} CSV "
                   f"({len(outs[0])} bytes, {n_rows} rows)")
    assert ok
