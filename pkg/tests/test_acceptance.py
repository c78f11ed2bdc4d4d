"""Acceptance gate: one timed check per headline claim.

Each test exercises one end-to-end guarantee at its stated tolerance and
budget, and prints a single [PASS]/[FAIL] line.  Run with -s to see them:

    pytest tests/test_acceptance.py -v -s
"""

import itertools
import math
import time

import numpy as np

from relaycap import (
    CutProfile,
    LineNetwork,
    NetworkParams,
    QuantizationScheme,
    SamplePool,
    CapacityTable,
    TableCache,
    brute_force_min_cut,
    check_capacity_properties,
    cut_value,
    default_q_grid,
    degraded_snr,
    estimate_ergodic_capacity,
    gap_trend,
    line_capacity,
    line_nnc_rate,
    min_cut_dp,
    nnc_lower_bound,
    optimize_quantization,
    penalty_bound,
)


def _report(num: int, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    in_time = elapsed < limit
    status = "PASS" if (ok and in_time) else "FAIL"
    print(f"[{status}] criterion {num}: {detail} [{elapsed:.2f}s / {limit:.0f}s]")
    assert ok, f"criterion {num}: {detail}"
    assert in_time, f"criterion {num}: runtime {elapsed:.2f}s exceeds {limit:.0f}s"


def test_criterion_1_siso_estimate_matches_quadrature():
    t0 = time.perf_counter()
    est = estimate_ergodic_capacity(1, 1, 1.0, 10**6, seed=0)
    elapsed = time.perf_counter() - t0
    oracle = 0.596347
    err = abs(est.mean - oracle)
    _report(
        1,
        err <= 3 * est.std_error,
        f"siso estimate {est.mean:.6f} within {err:.2e} of {oracle}"
        f" (3*se = {3 * est.std_error:.2e})",
        elapsed,
        10.0,
    )


def test_criterion_2_min_cut_equals_full_capacity():
    t0 = time.perf_counter()
    worst_eq = 0.0
    worst_margin = math.inf
    for K in (1, 2, 3):
        pool = SamplePool.build(K, 100_000, seed=2)
        for snr in (1.0, 10.0, 100.0):
            table = CapacityTable.from_pool(pool, snr, keep_per_draw=False)
            full = table.mean(K, K)
            for D in (2, 3, 4):
                params = NetworkParams(K, D, power=snr, noise_var=1.0)
                value, _ = brute_force_min_cut(params, table)
                worst_eq = max(worst_eq, abs(value - full))
                for counts in itertools.product(range(K + 1), repeat=D - 1):
                    cut = cut_value(CutProfile(counts), params, table)
                    worst_margin = min(worst_margin, cut.value - full)
    elapsed = time.perf_counter() - t0
    _report(
        2,
        worst_eq <= 1e-9 and worst_margin >= -1e-9,
        f"min cut = C(K,K) within {worst_eq:.1e}; "
        f"worst profile margin {worst_margin:+.1e} >= -1e-9",
        elapsed,
        60.0,
    )


def test_criterion_3_depth_matched_gap_within_log_bound():
    t0 = time.perf_counter()
    worst_slack = math.inf
    for K in (1, 2, 3):
        pool = SamplePool.build(K, 20_000, seed=3)
        cache = TableCache(pool)
        for snr in (1.0, 10.0, 100.0):
            upper = cache.at(snr).estimate(K, K)
            for D in (2, 4, 8):
                params = NetworkParams(K, D, power=snr, noise_var=1.0)
                scheme = QuantizationScheme(float(D - 1))
                bound = nnc_lower_bound(
                    params, scheme, cache.at(degraded_snr(params, scheme)),
                    mode="split_bound",
                )
                gap = upper.mean - bound.value
                allowed = K * math.log(D) + K
                allowed += 3 * math.hypot(upper.std_error, bound.std_error)
                worst_slack = min(worst_slack, allowed - gap)
    elapsed = time.perf_counter() - t0
    _report(
        3,
        worst_slack >= 0.0,
        f"gap <= K*ln(D) + K + 3*se at q=D-1; tightest slack {worst_slack:.3f} nats",
        elapsed,
        300.0,
    )


def test_criterion_4_line_gap_never_exceeds_log_depth_bound():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = -math.inf
    for D in (2, 4, 8, 16, 32, 64):
        bound = math.log(D) + 1.0
        for _ in range(100):
            gains = rng.exponential(size=D) * 10.0 ** rng.uniform(-2, 2)
            snr = 10.0 ** rng.uniform(-1, 2)
            net = LineNetwork(tuple(gains), power=snr, noise_var=1.0)
            gap = line_capacity(net) - line_nnc_rate(net, float(D - 1))
            worst = max(worst, gap - bound)
            assert gap <= bound  # exact, no tolerance
    elapsed = time.perf_counter() - t0
    _report(
        4,
        worst <= 0.0,
        f"600 random chains: gap - (ln(D)+1) at most {worst:+.3f} nats",
        elapsed,
        5.0,
    )


def test_criterion_5_per_draw_matrix_properties():
    t0 = time.perf_counter()
    pool = SamplePool.build(6, 10_000, seed=5)
    worst = 0.0
    all_passed = True
    for snr in (0.1, 1.0, 10.0):
        rep = check_capacity_properties(CapacityTable.from_pool(pool, snr))
        all_passed = all_passed and rep.passed
        worst = max(
            worst, rep.symmetry_error, rep.monotonicity_violation, rep.split_violation
        )
    elapsed = time.perf_counter() - t0
    _report(
        5,
        all_passed and worst <= 1e-9,
        f"symmetry/monotonicity/row-split on 10^4 draws, dims <= 6: "
        f"max violation {worst:.1e} <= 1e-9",
        elapsed,
        30.0,
    )


def test_criterion_6_dp_matches_brute_force():
    t0 = time.perf_counter()
    cases = 0
    for K in (1, 2, 3):
        table = CapacityTable.from_pool(SamplePool.build(K, 3_000, seed=6), 10.0)
        for D in (1, 2, 3, 4, 5):
            params = NetworkParams(K, D, power=10.0, noise_var=1.0)
            for pen in (0.0, math.log(1.5), 1.0):
                dp = min_cut_dp(params, table, node_penalty=pen)
                bf = brute_force_min_cut(params, table, node_penalty=pen)
                assert dp == bf  # value and argmin, bitwise
                cases += 1
    elapsed = time.perf_counter() - t0
    _report(6, cases == 45, f"DP = brute force exactly on {cases} cases", elapsed, 30.0)


def test_criterion_7_fixed_q_gap_grows_much_faster():
    t0 = time.perf_counter()
    fixed = gap_trend(2, [8, 32], snr=10.0, q_policy="fixed_1",
                      num_samples=20_000, seed=7)
    matched = gap_trend(2, [8, 32], snr=10.0, q_policy="depth_matched",
                        num_samples=20_000, seed=7)
    lhs = fixed[1].gap - fixed[0].gap
    rhs = matched[1].gap - matched[0].gap
    combined = math.sqrt(
        fixed[0].std_error**2 + fixed[1].std_error**2
        + 4 * (matched[0].std_error**2 + matched[1].std_error**2)
    )
    margin = lhs - 2 * rhs + 3 * combined
    elapsed = time.perf_counter() - t0
    _report(
        7,
        margin >= 0.0,
        f"gap growth D=8->32: fixed q {lhs:.2f} vs depth-matched {rhs:.2f} nats "
        f"(margin {margin:.2f})",
        elapsed,
        300.0,
    )


def test_criterion_8_optimizer_beats_both_anchors():
    t0 = time.perf_counter()
    checked = 0
    for K in (1, 2):
        for D in (2, 4, 8):
            params = NetworkParams(K, D, power=10.0, noise_var=1.0)
            grid = default_q_grid(D)
            assert 1.0 in grid and float(max(D - 1, 1)) in grid
            res = optimize_quantization(params, num_samples=5_000, seed=8)
            # anchor rates rebuilt from the same seed: identical pool, so the
            # comparison below is exact, not statistical
            cache = TableCache(SamplePool.build(K, 5_000, seed=8))
            for q in (1.0, float(max(D - 1, 1))):
                scheme = QuantizationScheme(q)
                anchor = nnc_lower_bound(
                    params, scheme, cache.at(degraded_snr(params, scheme))
                ).value
                assert res.rate >= anchor
                checked += 1
    elapsed = time.perf_counter() - t0
    _report(
        8,
        checked == 12,
        f"optimized rate >= rate(q=1) and rate(q=D-1) exactly, {checked} anchors",
        elapsed,
        300.0,
    )


def test_criterion_9_depth_matched_penalty_at_most_K_nats():
    t0 = time.perf_counter()
    worst = -math.inf
    for K in range(1, 9):
        for D in range(1, 129):
            params = NetworkParams(K, D, power=10.0, noise_var=1.0)
            scheme = QuantizationScheme.depth_matched(D)
            worst = max(worst, penalty_bound(params, scheme) - K)
            assert penalty_bound(params, scheme) <= K
    elapsed = time.perf_counter() - t0
    _report(
        9,
        worst <= 0.0,
        f"penalty bound at q=D-1 exceeds K by at most {worst:+.3e} nats "
        f"over K <= 8, D <= 128",
        elapsed,
        1.0,
    )
