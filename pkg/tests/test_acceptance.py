"""Acceptance suite: every exit criterion checked at its stated tolerance.

The Monte Carlo criteria default to the documented reduced mode (10 trials,
tolerances x1.5) so the suite finishes on a small machine; set SPSBENCH_FULL=1
for the full 40-trial mode at the tight tolerances. SPSBENCH_JOBS bounds the
worker count (default: all cores).

Each criterion reports one PASS/FAIL line in the terminal summary.
"""

import os
import time

import numpy as np
import pytest

from spsbench import analytic, cli
from spsbench.analytic import PcnParams, SpsConfig
from spsbench.harness import read_csv, run_trials
from spsbench.metrics import (
    aggregate,
    aggregate_all_pairs,
    bin_by_distance,
    network_throughput_by_trial,
    pooled_prr,
)
from spsbench.simcore import FullyConnected, PartiallyConnected

from conftest import record_criterion
from _oracles import bisect_prr, steady_prr_rhs

FULL = os.environ.get("SPSBENCH_FULL", "") == "1"
JOBS = int(os.environ.get("SPSBENCH_JOBS", os.cpu_count() or 1))
TRIALS = 40 if FULL else 10
TOL_SCALE = 1.0 if FULL else 1.5  # documented reduced-trials fallback
FC_TOL = 0.02 * TOL_SCALE
PC_TOL = 0.03 * TOL_SCALE

N_SEN_GRID = (100, 200, 300, 400)
N_S_GRID = (5, 10, 15)
P_K_GRID = (0.0, 0.8)
ROAD = PartiallyConnected(road_km=5.0, rho=200.0, r_sen_km=0.4)
PCN = PcnParams(rho=200.0, r_sen_km=0.4)
BIN_W = 25.0


def check(criterion: str, passed: bool, detail: str):
    record_criterion(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
    assert passed, f"{criterion}: {detail}"


# ---------------------------------------------------------------------------
# shared simulation data (session-scoped so criteria reuse the same runs)


# The model-agreement runs disable the sensing-deafness extension (strict
# paper mode): the analytic model describes a MAC whose sensing is not
# half-duplex-limited, and the extension's extra collisions are a documented
# deviation, visible at the heaviest keep-probability point.


@pytest.fixture(scope="session")
def fc_data():
    """(p_k, n_sen) -> pooled sim PRR + aggregate, n_s=5, full-table grid."""
    out = {}
    for p_k in P_K_GRID:
        cfg = SpsConfig(p_k=p_k, n_s=5, tau=10.0)
        for n_sen in N_SEN_GRID:
            trials = run_trials(
                FullyConnected(n_sen + 1), cfg, trials=TRIALS, duration_s=300.0,
                warmup_s=10.0, base_seed=42_000, jobs=JOBS, deaf_sensing=False,
            )
            out[(p_k, n_sen)] = {
                "pooled": pooled_prr(trials),
                "agg": aggregate_all_pairs(trials),
            }
    return out


@pytest.fixture(scope="session")
def pc_data():
    """(p_k, n_s) -> distance-binned aggregates + network throughput."""
    out = {}
    for p_k in P_K_GRID:
        for n_s in N_S_GRID:
            cfg = SpsConfig(p_k=p_k, n_s=n_s, tau=10.0)
            trials = run_trials(
                ROAD, cfg, trials=TRIALS, duration_s=500.0, warmup_s=10.0,
                base_seed=43_000, jobs=JOBS, deaf_sensing=False,
            )
            bins = aggregate(bin_by_distance(trials, BIN_W), trials)
            out[(p_k, n_s)] = {
                "bins": bins,
                "net": network_throughput_by_trial(trials, BIN_W),
            }
    return out


@pytest.fixture(scope="session")
def ceiling_data():
    """n_s -> aggregate for the HD-dominated point (N_sen=50, p_k=0.8),
    always at the full 40 trials x 300 s."""
    started = time.perf_counter()
    out = {}
    for n_s in N_S_GRID:
        cfg = SpsConfig(p_k=0.8, n_s=n_s, tau=10.0)
        trials = run_trials(
            FullyConnected(51), cfg, trials=40, duration_s=300.0,
            warmup_s=10.0, base_seed=44_000, jobs=JOBS,
        )
        out[n_s] = aggregate_all_pairs(trials)
    out["elapsed_s"] = time.perf_counter() - started
    return out


# ---------------------------------------------------------------------------
# criteria


def test_criterion_binomial_identity():
    started = time.perf_counter()
    worst = 0.0
    combos = 0
    for p_k in (0.0, 0.2, 0.5, 0.8, 1.0):
        cfg = SpsConfig(p_k=p_k, n_s=5, tau=10.0)
        for n_sen in (1, 10, 100, 400):
            for n_a in (50.0, 400.0, 1000.0):
                cf = analytic.p_rs_closed_form(cfg, n_sen, n_a)
                bs = analytic.p_rs_binomial_sum(cfg, n_sen, n_a)
                worst = max(worst, abs(cf - bs))
                combos += 1
    elapsed = time.perf_counter() - started
    check(
        "binomial identity",
        worst <= 1e-10 and combos == 60 and elapsed < 1.0,
        f"max |closed - summed| = {worst:.2e} over {combos} combos in {elapsed:.2f}s",
    )


def test_criterion_fixed_point():
    started = time.perf_counter()
    worst_residual = 0.0
    worst_bisect = 0.0
    points = [
        (p_k, n_s, n_sen)
        for p_k in P_K_GRID
        for n_s in N_S_GRID
        for n_sen in N_SEN_GRID
    ] + [(p_k, n_s, 159) for p_k in P_K_GRID for n_s in N_S_GRID]
    for p_k, n_s, n_sen in points:
        cfg = SpsConfig(p_k=p_k, n_s=n_s, tau=10.0)
        prr = analytic.prr_fcn(cfg, n_sen)
        residual = abs(prr - steady_prr_rhs(p_k, n_s, 10.0, 1.0, n_sen, prr))
        worst_residual = max(worst_residual, residual)
        worst_bisect = max(worst_bisect, abs(prr - bisect_prr(p_k, n_s, n_sen)))
    elapsed = time.perf_counter() - started
    check(
        "fixed-point correctness",
        worst_residual <= 1e-9 and worst_bisect <= 1e-8 and elapsed < 1.0,
        f"max residual {worst_residual:.2e}, max |vs bisection| {worst_bisect:.2e} "
        f"over {len(points)} points in {elapsed:.2f}s",
    )


def test_criterion_keeping_gap():
    lo = analytic.prr_fcn(SpsConfig(p_k=0.0, n_s=5, tau=10.0), 400)
    hi = analytic.prr_fcn(SpsConfig(p_k=0.8, n_s=5, tau=10.0), 400)
    gap = hi - lo
    thr_gap = analytic.throughput(
        SpsConfig(p_k=0.8, n_s=5, tau=10.0), hi
    ) - analytic.throughput(SpsConfig(p_k=0.0, n_s=5, tau=10.0), lo)
    check(
        "keeping-probability gap",
        abs(gap - 0.198) <= 0.015 and abs(thr_gap - 1.96) <= 0.15,
        f"PRR gap {gap:.4f} (0.198±0.015), throughput gap {thr_gap:.3f} (1.96±0.15)",
    )


def test_criterion_throughput_ceiling(ceiling_data):
    failures = []
    for n_s in N_S_GRID:
        thr = ceiling_data[n_s].throughput_mean
        if abs(thr - 9.9) > 0.05:
            failures.append(f"n_s={n_s}: {thr:.4f}")
    detail = ", ".join(
        f"n_s={n_s}: {ceiling_data[n_s].throughput_mean:.4f}" for n_s in N_S_GRID
    )
    check(
        "throughput ceiling (sim, N_sen=50, p_k=0.8)",
        not failures,
        f"{detail} (9.9±0.05 each); 40 trials x 300 s in {ceiling_data['elapsed_s']:.0f}s",
    )


def test_criterion_fc_agreement(fc_data):
    worst = 0.0
    worst_pt = None
    for (p_k, n_sen), data in fc_data.items():
        ana = analytic.prr_fcn(SpsConfig(p_k=p_k, n_s=5, tau=10.0), n_sen)
        diff = abs(data["pooled"] - ana)
        if diff > worst:
            worst, worst_pt = diff, (p_k, n_sen)
    check(
        "model vs sim, fully connected",
        worst <= FC_TOL,
        f"max |pooled sim PRR - analytic| = {worst:.4f} at {worst_pt} "
        f"(tol {FC_TOL:.3f}, {TRIALS} trials, strict paper mode)",
    )


def test_criterion_pc_agreement(pc_data):
    worst = 0.0
    worst_pt = None
    for p_k in P_K_GRID:
        cfg = SpsConfig(p_k=p_k, n_s=5, tau=10.0)
        for agg in pc_data[(p_k, 5)]["bins"]:
            ana = analytic.prr_pcn(cfg, PCN, agg.d_bin_m)
            diff = abs(agg.prr_mean - ana)
            if diff > worst:
                worst, worst_pt = diff, (p_k, agg.d_bin_m)
    check(
        "model vs sim, road distance curve",
        worst <= PC_TOL,
        f"max |sim PRR - analytic| = {worst:.4f} at (p_k, d)={worst_pt} "
        f"(tol {PC_TOL:.3f}, {TRIALS} trials, strict paper mode)",
    )


def test_criterion_hd_floor():
    started = time.perf_counter()
    cfg = SpsConfig(p_k=0.0, n_s=5, tau=10.0)
    trials = run_trials(
        FullyConnected(2), cfg, trials=40, duration_s=300.0, warmup_s=10.0,
        base_seed=45_000, jobs=JOBS,
    )
    received = sum(int(t.packets_received.sum()) for t in trials)
    sent = sum(int(t.packets_sent.sum()) for t in trials)
    loss = 1.0 - received / sent
    elapsed = time.perf_counter() - started
    check(
        "half-duplex floor",
        abs(loss - 0.010) <= 0.003 and elapsed < 10.0,
        f"2-vehicle loss rate {loss:.4f} (0.010±0.003) in {elapsed:.1f}s",
    )


def test_criterion_shape_properties(fc_data, pc_data, ceiling_data):
    problems = []

    # analytic: throughput non-increasing in N_sen, PRR non-decreasing in p_k,
    # throughput non-decreasing in n_s
    for p_k in P_K_GRID:
        for n_s in N_S_GRID:
            cfg = SpsConfig(p_k=p_k, n_s=n_s, tau=10.0)
            thr = [
                analytic.throughput(cfg, analytic.prr_fcn(cfg, n)) for n in N_SEN_GRID
            ]
            if not all(a >= b for a, b in zip(thr, thr[1:])):
                problems.append(f"analytic thr rises in N_sen at p_k={p_k}, n_s={n_s}")
    for n_sen in N_SEN_GRID:
        prr = [
            analytic.prr_fcn(SpsConfig(p_k=round(0.1 * i, 1), n_s=5, tau=10.0), n_sen)
            for i in range(10)
        ]
        if not all(a <= b for a, b in zip(prr, prr[1:])):
            problems.append(f"analytic PRR falls in p_k at N_sen={n_sen}")
        thr = [
            analytic.throughput(
                SpsConfig(p_k=0.0, n_s=n_s, tau=10.0),
                analytic.prr_fcn(SpsConfig(p_k=0.0, n_s=n_s, tau=10.0), n_sen),
            )
            for n_s in N_S_GRID
        ]
        if not all(a <= b for a, b in zip(thr, thr[1:])):
            problems.append(f"analytic thr falls in n_s at N_sen={n_sen}")

    # analytic: road PRR non-increasing in distance
    for p_k in P_K_GRID:
        cfg = SpsConfig(p_k=p_k, n_s=5, tau=10.0)
        centers = [(b + 0.5) * BIN_W for b in range(16)]
        prr = [analytic.prr_pcn(cfg, PCN, d) for d in centers]
        if not all(a >= b for a, b in zip(prr, prr[1:])):
            problems.append(f"analytic road PRR rises in d at p_k={p_k}")

    # analytic: network-throughput gap between p_k=0.8 and 0 shrinks with n_s
    def net_gap_analytic(n_s):
        vals = {}
        for p_k in P_K_GRID:
            cfg = SpsConfig(p_k=p_k, n_s=n_s, tau=10.0)
            centers = [(b + 0.5) * BIN_W for b in range(16)]
            vals[p_k] = float(
                np.mean(
                    [analytic.throughput(cfg, analytic.prr_pcn(cfg, PCN, d)) for d in centers]
                )
            )
        return vals[0.8] - vals[0.0]

    gaps = [net_gap_analytic(n_s) for n_s in N_S_GRID]
    if not all(a >= b for a, b in zip(gaps, gaps[1:])):
        problems.append(f"analytic network-throughput gap grows with n_s: {gaps}")

    # simulated, up to CI overlap
    for p_k in P_K_GRID:
        seq = [fc_data[(p_k, n)]["agg"] for n in N_SEN_GRID]
        for a, b in zip(seq, seq[1:]):
            if b.throughput_mean > a.throughput_mean + a.throughput_ci95 + b.throughput_ci95:
                problems.append(f"sim thr rises in N_sen at p_k={p_k}")
    for n_sen in N_SEN_GRID:
        lo, hi = fc_data[(0.0, n_sen)]["agg"], fc_data[(0.8, n_sen)]["agg"]
        if hi.prr_mean < lo.prr_mean - lo.prr_ci95 - hi.prr_ci95:
            problems.append(f"sim PRR falls in p_k at N_sen={n_sen}")
    seq = [ceiling_data[n_s] for n_s in N_S_GRID]
    for a, b in zip(seq, seq[1:]):
        if b.throughput_mean < a.throughput_mean - a.throughput_ci95 - b.throughput_ci95:
            problems.append("sim thr falls in n_s at N_sen=50")
    for p_k in P_K_GRID:
        bins = pc_data[(p_k, 5)]["bins"]
        for a, b in zip(bins, bins[1:]):
            if b.prr_mean > a.prr_mean + a.prr_ci95 + b.prr_ci95:
                problems.append(f"sim road PRR rises at d={b.d_bin_m}, p_k={p_k}")
    sim_gaps = []
    slack = 0.0
    for n_s in N_S_GRID:
        hi, lo = pc_data[(0.8, n_s)]["net"], pc_data[(0.0, n_s)]["net"]
        sim_gaps.append(hi.throughput_mean - lo.throughput_mean)
        slack = max(slack, hi.throughput_ci95 + lo.throughput_ci95)
    if sim_gaps[-1] > sim_gaps[0] + 2 * slack:
        problems.append(f"sim network gap grows with n_s: {sim_gaps}")

    check(
        "shape properties",
        not problems,
        "; ".join(problems)
        if problems
        else f"all monotonicity and gap-shrink checks hold "
        f"(analytic exact, simulated within CI; gaps {['%.3f' % g for g in gaps]})",
    )


def test_criterion_reproduce_determinism(tmp_path):
    args = [
        "reproduce", "4a", "--trials", "2", "--duration", "5",
        "--seed", "31", "--jobs", str(JOBS),
    ]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "fig4a.csv").read_bytes()
    b = (tmp_path / "b" / "fig4a.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "fig4a.csv")
    check(
        "reproduce determinism",
        a == b and len(rows) == 32,
        f"two `reproduce 4a` runs byte-identical ({len(a)} bytes, {len(rows)} rows)",
    )
