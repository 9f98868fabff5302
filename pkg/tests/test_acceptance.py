"""Acceptance suite: one test per numbered criterion, at the stated tolerance.

Each test prints a single summary line (visible with ``pytest -s`` or in the
captured output) carrying the measured worst case next to its budget.

Criterion 8 is expected to fail at its third clause: the analytic model and
the simulator independently agree that gain(delta=1e2) reaches ~1.016 at
t_bs/t_d = 1000 (download-time savings from the ~H_n/(mu*delta) fraction of
requests that still see live storage nodes outweigh the wasted slot), so the
1.001 ceiling only holds once delta is pushed further (it does hold by 1e4,
which the delay-model invariant tests cover).  The clause is asserted as
written rather than weakened.
"""

import time
from math import fsum, sqrt

import numpy as np
import pytest

from d2ddelay import (
    CodeParams,
    Method,
    SimConfig,
    SystemParams,
    availability_pmf,
    avg_download_delay,
    d2d_attempt_oracle,
    departures_pmf,
    outcome_distribution,
    simulate,
    t_eta,
)
from d2ddelay.charts import emit_svg
from d2ddelay.cli import main
from d2ddelay.oracles import (
    QuadratureSpec,
    availability_quadrature,
    departures_binomial,
    exhaustive_outcome_small,
)
from d2ddelay.sweep import SweepSpec, run_sweep

SV = dict(m=30.0, mu=1.0, omega=0.02)


def sv_params(delta, t_d, t_bs):
    return SystemParams(t_d=t_d, t_bs=t_bs, delta=delta, **SV)


def sv_point(code, ratio, delta):
    t_bs = 1.0 / code[1]
    return sv_params(delta, t_bs / ratio, t_bs)


def test_criterion_01_kernel_normalization():
    grid = np.logspace(-3, 2, 50)
    budget = 10.0
    start = time.time()
    worst = 0.0
    cases = 0
    for n in range(1, 26):
        for delta in grid:
            pmf = availability_pmf(sv_params(delta, 0.05, 0.5), n)
            worst = max(worst, abs(fsum(pmf.masses) - 1.0))
            cases += 1
    for x in range(1, 26):
        for t_d in grid:
            pmf = departures_pmf(x, 1.0, t_d)
            worst = max(worst, abs(fsum(pmf.masses) - 1.0))
            cases += 1
    elapsed = time.time() - start
    assert worst <= 1e-9
    assert elapsed < budget
    print(f"[criterion 01] PASS normalization: worst |sum-1| {worst:.2e} "
          f"over {cases} cases in {elapsed:.1f}s (budget {budget:.0f}s)")


def test_criterion_02_availability_oracle_equivalence():
    budget = 30.0
    start = time.time()
    worst = 0.0
    for mu in np.logspace(-1, 0.5, 10):
        for delta in np.logspace(-3, 2, 10):
            subintervals = int(min(1 << 17, max(4096, 512 * mu * delta)))
            subintervals += subintervals % 2
            spec = QuadratureSpec(subintervals=subintervals)
            params = SystemParams(m=100.0, mu=mu, omega=0.02, t_d=0.05, t_bs=0.5, delta=delta)
            for n in range(1, 16):
                oracle = availability_quadrature(n, mu, delta, spec).as_array()
                for method in Method:
                    got = availability_pmf(params, n, method).as_array()
                    worst = max(worst, float(np.max(np.abs(got - oracle))))
    elapsed = time.time() - start
    assert worst <= 1e-7
    assert elapsed < budget
    print(f"[criterion 02] PASS availability vs quadrature: worst {worst:.2e} "
          f"over 100 (mu,delta) points, n<=15, both methods, in {elapsed:.1f}s (budget {budget:.0f}s)")


def test_criterion_03_departures_oracle_equivalence():
    budget = 5.0
    start = time.time()
    worst = 0.0
    for x in range(1, 26):
        for t_d in np.logspace(-3, 2, 25):
            paper = departures_pmf(x, 1.0, t_d, Method.PAPER).as_array()
            oracle = departures_binomial(x, 1.0, t_d).as_array()
            worst = max(worst, float(np.max(np.abs(paper - oracle))))
    elapsed = time.time() - start
    assert worst <= 1e-12
    assert elapsed < budget
    print(f"[criterion 03] PASS paper-form departures vs binomial: worst {worst:.2e} "
          f"in {elapsed:.1f}s (budget {budget:.0f}s)")


def test_criterion_04_partition_of_unity():
    budget = 10.0
    start = time.time()
    worst = 0.0
    for code in ((1, 1), (2, 1), (4, 2), (8, 4)):
        for ratio in (10.0, 100.0, 1000.0):
            for delta in np.logspace(-2, 2, 25):
                outcome = outcome_distribution(sv_point(code, ratio, delta), CodeParams(*code))
                worst = max(worst, abs(outcome.total() - 1.0))
    elapsed = time.time() - start
    assert worst <= 1e-8
    assert elapsed < budget
    print(f"[criterion 04] PASS outcome partition: worst |sum-1| {worst:.2e} "
          f"over 300 grid points in {elapsed:.1f}s (budget {budget:.0f}s)")


def test_criterion_05_small_instance_brute_force():
    budget = 10.0
    start = time.time()
    worst = 0.0
    deltas = np.logspace(np.log10(0.05), np.log10(5.0), 5)
    t_ds = (0.02, 0.1)
    for code in ((1, 1), (2, 1), (3, 2)):
        for delta in deltas:
            for t_d in t_ds:
                params = sv_params(float(delta), t_d, 10 * t_d)
                enum = exhaustive_outcome_small(params, CodeParams(*code))
                model = outcome_distribution(params, CodeParams(*code))
                diffs = [abs(model.p_fail_first - enum.p_fail_first),
                         abs(model.p_full - enum.p_full)]
                diffs += [abs(a - b) for a, b in zip(model.p_partial, enum.p_partial)]
                worst = max(worst, max(diffs))
    elapsed = time.time() - start
    assert worst <= 1e-10
    assert elapsed < budget
    print(f"[criterion 05] PASS exhaustive enumeration: worst component diff {worst:.2e} "
          f"over 3 codes x 10 points in {elapsed:.1f}s (budget {budget:.0f}s)")


def test_criterion_06_recursion_vs_attempt_oracle():
    budget = 300.0
    trials = 10_000_000
    seed = 0xD2D
    start = time.time()
    worst_sigma = 0.0
    for code in ((4, 2), (8, 4)):
        for delta in (0.1, 1.0, 10.0):
            params = sv_point(code, 10.0, delta)
            stats = d2d_attempt_oracle(params, CodeParams(*code), trials=trials, seed=seed)
            outcome = outcome_distribution(params, CodeParams(*code))
            expected = (outcome.p_fail_first, *outcome.p_partial, outcome.p_full)
            for freq, se, target in zip(stats.freqs, stats.freq_stderr, expected):
                sigma = abs(freq - target) / max(se, 1e-12)
                worst_sigma = max(worst_sigma, sigma)
                assert abs(freq - target) <= 3 * max(se, 1e-12)
            occ_target = t_eta(outcome, CodeParams(*code), params.t_d)
            occ_sigma = abs(stats.mean_occupancy - occ_target) / stats.occupancy_stderr
            worst_sigma = max(worst_sigma, occ_sigma)
            assert abs(stats.mean_occupancy - occ_target) <= 3 * stats.occupancy_stderr
    elapsed = time.time() - start
    assert elapsed < budget
    print(f"[criterion 06] PASS recursion vs 1e7-trial oracle: worst deviation "
          f"{worst_sigma:.2f} standard errors in {elapsed:.1f}s (budget {budget:.0f}s)")


def test_criterion_07_end_to_end_faithful_simulation():
    budget = 600.0
    start = time.time()
    points = [((1, 1), 1.0), ((2, 1), 1.0), ((4, 2), 0.3), ((4, 2), 1.0), ((4, 2), 3.0), ((8, 4), 1.0)]
    worst_t_dw = worst_busy = 0.0
    for index, (code, delta) in enumerate(points):
        params = sv_point(code, 10.0, delta)
        report = simulate(
            SimConfig(params=params, code=CodeParams(*code), num_requests=100_000,
                      warmup_requests=None, seed=1000 + index)
        )
        summary = avg_download_delay(params, CodeParams(*code))
        busy_model = 1.0 - summary.p_idle
        t_dw_rel = abs(report.mean_delay - summary.t_dw) / summary.t_dw
        busy_rel = abs(report.busy_fraction - busy_model) / busy_model
        worst_t_dw = max(worst_t_dw, t_dw_rel)
        worst_busy = max(worst_busy, busy_rel)
        assert t_dw_rel <= 0.05
        assert busy_rel <= 0.05
    elapsed = time.time() - start
    assert elapsed < budget
    print(f"[criterion 07] PASS analytic vs faithful simulation: worst t_dw rel "
          f"{worst_t_dw:.3%}, worst busy rel {worst_busy:.3%}, 6 points x 1e5 requests "
          f"in {elapsed:.1f}s (budget {budget:.0f}s)")


def test_criterion_08_qualitative_gain_curves():
    budget = 10.0
    start = time.time()
    spec = SweepSpec(engine="analytic")  # defaults reproduce the experiment grid
    rows = run_sweep(spec)
    series: dict[tuple, list] = {}
    for row in rows:
        series.setdefault((row.n, row.k, round(row.t_bs / row.t_d, 6)), []).append(row)
    failures = []
    for (n, k, ratio), points in sorted(series.items()):
        points.sort(key=lambda r: r.delta)
        gains = [r.gain for r in points]
        if not gains[0] > 1.0:
            failures.append(f"({n},{k}) ratio {ratio}: gain {gains[0]:.4f} at delta=1e-2 not > 1")
        for earlier, later in zip(gains, gains[1:]):
            if later > earlier + 1e-6:
                failures.append(f"({n},{k}) ratio {ratio}: gain increases along delta")
                break
        if not gains[-1] <= 1.001:
            failures.append(
                f"({n},{k}) ratio {ratio}: gain {gains[-1]:.6f} at delta=1e2 exceeds 1.001"
            )
    for (n, k) in {(row.n, row.k) for row in rows}:
        by_ratio = [series[(n, k, r)][0].gain for r in (10.0, 100.0, 1000.0)]
        if not (by_ratio[0] < by_ratio[1] < by_ratio[2]):
            failures.append(f"({n},{k}): gain at delta=1e-2 not increasing with ratio")
    elapsed = time.time() - start
    assert elapsed < budget
    if failures:
        print(f"[criterion 08] FAIL qualitative gain curves ({len(failures)} clauses):")
        for line in failures:
            print(f"    {line}")
    else:
        print(f"[criterion 08] PASS qualitative gain curves in {elapsed:.1f}s")
    assert not failures, "; ".join(failures)


def test_criterion_09_stationary_occupancy():
    budget = 120.0
    start = time.time()
    params = sv_point((4, 2), 10.0, 1.0)
    report = simulate(
        SimConfig(params=params, code=CodeParams(4, 2), num_requests=200_000,
                  warmup_requests=None, seed=2026)
    )
    first, second = report.occupancy_first_half, report.occupancy_second_half
    pooled = sqrt(first.stderr**2 + second.stderr**2)
    elapsed = time.time() - start
    assert abs(first.mean - second.mean) <= 3 * pooled
    assert elapsed < budget
    print(f"[criterion 09] PASS occupancy stationarity: halves differ by "
          f"{abs(first.mean - second.mean):.2e} vs 3*pooled {3 * pooled:.2e} "
          f"in {elapsed:.1f}s (budget {budget:.0f}s)")


def test_criterion_10_byte_identical_outputs(tmp_path):
    def run(tag):
        csv_path = tmp_path / f"{tag}.csv"
        svg_path = tmp_path / f"{tag}.svg"
        code = main([
            "sweep", "--codes", "2,1;4,2", "--deltas", "0.2,2.0", "--ratios", "10",
            "--engine", "both", "--num-requests", "800", "--warmup-requests", "100",
            "--seed", "123", "--out", str(csv_path), "--svg", str(svg_path),
        ])
        assert code == 0
        return csv_path.read_bytes(), svg_path.read_bytes()

    first_csv, first_svg = run("first")
    second_csv, second_svg = run("second")
    assert first_csv == second_csv
    assert first_svg == second_svg
    print(f"[criterion 10] PASS determinism: identical CSV ({len(first_csv)} bytes) "
          f"and SVG ({len(first_svg)} bytes) across two sweep runs")
