"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed even when output capture is on.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from mcbound.cli import main, table_rows
from mcbound.drift import (AtomMeasure, DensityMeasure, PartitionOperator, SubEigenCertificate,
                           build_q_matrix, find_sub_eigenvector, grid_check, perron_root,
                           subeigenfunction_from_vector, switch_operator, truncate_drift)
from mcbound.gibbs import (certify, compute_constants, default_wasserstein_bound,
                           one_step_tv_check, reference_case)
from mcbound.ifs import sample_stationary
from mcbound.logistic import (LogisticModel, density_mass, lemma_logwass_check,
                              logistic_system, rate_transfer_check)
from mcbound.rng import RngStream

SEED = 20080701


@pytest.fixture
def verdict(capsys):
    def emit(num, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n[criterion {num:>2}] {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.1f}s)")
    return emit


def _table_ok(which):
    rows = [r for r in table_rows(which) if r["checked"]]
    bad = [f"{r['case']}.{r['quantity']}={r['computed']!r} vs {r['published']}"
           for r in rows if r["match"] == "mismatch"]
    return rows, bad


def test_criterion_01_table1(verdict):
    t = time.perf_counter()
    rows, bad = _table_ok("table1")
    exact = [r for r in rows if "/" in r["published"] or r["published"] in ("1", "0.6", "5.25", "1.2")]
    exact_ok = all(r["match"] == "exact" for r in exact)
    ok = not bad and exact_ok and len(rows) == 9
    verdict(1, ok, f"Table 1: {len(rows)} values, {len(exact)} exact, mismatches {bad or 'none'}",
            time.perf_counter() - t)
    assert ok


def test_criterion_02_table2(verdict):
    t = time.perf_counter()
    rows, bad = _table_ok("table2")
    wanted = {"r1", "A", "r1_eps", "C_hat_1"}
    covered = {(r["case"], r["quantity"]) for r in rows if r["quantity"] in wanted}
    ok = not bad and len(covered) == 12
    verdict(2, ok, f"Table 2: {len(covered)} of 12 values at 4 s.f., mismatches {bad or 'none'}",
            time.perf_counter() - t)
    assert ok


def test_criterion_03_thresholds(verdict):
    t = time.perf_counter()
    want = {("remarks_k1", "threshold"): [36, 27, 228],
            ("table2", "w_threshold"): [5, 6, 6],
            ("remarks_k1_tv", "threshold"): [49, 31, 249],
            ("remarks_k0_tv", "threshold"): [11, 10, 11]}
    got = {}
    for (which, q), expect in want.items():
        rows = {r["case"]: r["computed"] for r in table_rows(which) if r["quantity"] == q}
        got[which] = [rows[c] for c in "ABC"]
    ok = all(got[w] == e for (w, _), e in want.items())
    verdict(3, ok, "W K=1 {remarks_k1}, W K=0 {table2}, TV K=1 {remarks_k1_tv}, "
            "TV K=0 {remarks_k0_tv}".format(**got), time.perf_counter() - t)
    assert ok


def test_criterion_04_tv_constants(verdict):
    t = time.perf_counter()
    expect = {"A": (11 / 13, 8722), "B": (3 / 4, 3.642), "C": (3 / 4, 20.96)}
    parts, ok = [], True
    for case, (w, ct) in expect.items():
        c = compute_constants(reference_case(case, 0))
        good = abs(c.w - w) < 1e-15 and float(f"{c.C_tilde:.3g}") == float(f"{ct:.3g}")
        ok &= good
        parts.append(f"{case}: w={c.w:.6g}, C~={c.C_tilde:.6g}")
    for case in "ABC":
        m = reference_case(case, 1)
        k1 = compute_constants(m).tv_coefficient_k1
        ok &= abs(k1 - m.J / 2 * (1 + abs(m.y_bar) / math.sqrt(2 * math.pi))) < 1e-12
    verdict(4, ok, "; ".join(parts), time.perf_counter() - t)
    assert ok


def test_criterion_05_k0_certification(verdict):
    t = time.perf_counter()
    parts, ok = [], True
    for case in "ABC":
        m = reference_case(case, 0)
        rows = certify(m, [1, 2, 5, 10], 100_000, RngStream(SEED).child(ord(case)), x0=1.0,
                       curve=default_wasserstein_bound(m))
        ok &= all(r["pass"] for r in rows)
        worst = max(rows, key=lambda r: (r["empirical"] - r["bound"]) / r["std_error"])
        parts.append(f"{case}: worst n={worst['n']} W1={worst['empirical']:.3g} "
                     f"bound={worst['bound']:.3g} se={worst['std_error']:.2g}")
    elapsed = time.perf_counter() - t
    ok &= elapsed < 60
    verdict(5, ok, "; ".join(parts), elapsed)
    assert ok


def test_criterion_06_one_step_tv_lemmas(verdict):
    t = time.perf_counter()
    grid = np.geomspace(0.05, 20, 22)[1:-1]
    parts, ok = [], True
    for K in (1, 0):
        for case in "ABC":
            m = reference_case(case, K)
            worst, viol = 0.0, 0
            for i, x in enumerate(grid):
                for y in grid[i + 1:]:
                    chk = one_step_tv_check(m, x, y, tolerance=1e-6, strict=False)
                    viol += not chk.holds
                    worst = max(worst, chk.lhs / chk.rhs)
            ok &= viol == 0
            parts.append(f"K={K} {case}: max lhs/rhs {worst:.3f}")
    elapsed = time.perf_counter() - t
    ok &= elapsed < 60
    verdict(6, ok, f"20x20 grid in (0.05, 20)^2; " + "; ".join(parts), elapsed)
    assert ok


def test_criterion_07_logistic_suite(verdict):
    t = time.perf_counter()
    grid = np.linspace(0.05, 0.95, 20)
    norm_err = max(abs(density_mass(LogisticModel(a), x) - 1.0)
                   for a in (0.75, 1.0, 2.0, 3.0) for x in grid)
    lemma = {}
    for a in (0.75, 1.0, 2.0, 3.0):
        m = LogisticModel(a)
        checks = [lemma_logwass_check(m, x, y, strict=False) for x in grid for y in grid]
        bad = [c for c in checks if not c.holds]
        lemma[a] = (len(bad), max(c.lhs / c.rhs for c in checks if c.rhs > 0))
    ks = {}
    for a in (1.0, 2.0):
        sysm = logistic_system(LogisticModel(a))
        pi = sample_stationary(sysm, "exact", 100_000, RngStream(SEED).child(int(a))).values
        step = sysm.apply(sysm.sample_noise(RngStream(SEED).child(10 + int(a)), 1, pi.size), pi)
        ks[a] = stats.kstest(step, stats.beta(a, a).cdf).pvalue
    elapsed = time.perf_counter() - t
    ok = (norm_err <= 1e-8 and all(v == 0 for v, _ in lemma.values())
          and all(p > 0.01 for p in ks.values()) and elapsed < 120)
    lem = ", ".join(f"a={a}: {v} violations (max ratio {r:.3g})" for a, (v, r) in lemma.items())
    verdict(7, ok, f"normalization err {norm_err:.1e}; lemma {lem}; "
            f"KS p {', '.join(f'a={a}: {p:.3f}' for a, p in ks.items())}", elapsed)
    assert ok


def test_criterion_08_rate_transfer(verdict):
    t = time.perf_counter()
    res = rate_transfer_check(LogisticModel(2.0), x0=0.3, n_lo=10, n_hi=60, replicas=100_000,
                              rng=RngStream(SEED))
    elapsed = time.perf_counter() - t
    ok = res["pass"] and elapsed < 300
    tv, w = res["tv_fit"], res["wasserstein_fit"]
    verdict(8, ok, f"a=2: TV rate {tv['rate']:.4f} band {np.round(tv['band'], 4).tolist()}; "
            f"W rate {w['rate']:.4f}, W^(2/3) {res['transferred_rate']:.4f} "
            f"(upper band {res['transferred_band_hi']:.4f})", elapsed)
    assert ok


def _random_operator(gen):
    n = int(gen.integers(1, 4))
    edges = np.concatenate([[0.0], np.sort(gen.uniform(0.2, 2.8, n - 1)), [3.0]])
    c = gen.uniform(0.1, 1.0, 3)
    measures = []
    for _ in range(n):
        if gen.uniform() < 0.5:
            lo, hi = sorted(gen.uniform(0, 3, 2))
            w = gen.uniform(0.05, 0.3)
            measures.append(DensityMeasure(lambda x, w=w: w, lo, hi))
        else:
            k = int(gen.integers(1, 3))
            measures.append(AtomMeasure(tuple(gen.uniform(0.01, 2.99, k)),
                                        tuple(gen.uniform(0.02, 0.2, k))))
    return PartitionOperator(lambda x, c=c: c[0] + c[1] * x + c[2] * x * x,
                             tuple(zip(edges[:-1], edges[1:])), tuple(measures))


def test_criterion_09_drift_oracles(verdict):
    t = time.perf_counter()
    gen = np.random.default_rng(SEED)
    disagreements = 0
    for _ in range(50):
        op = _random_operator(gen)
        q = build_q_matrix(op)
        root, _ = perron_root(q)
        r = root * 1.01
        cert = find_sub_eigenvector(q, r)
        if not (cert and grid_check(op, subeigenfunction_from_vector(op, cert), r).passed):
            disagreements += 1
        low = root - 1e-3
        inf = find_sub_eigenvector(q, low)
        phi = subeigenfunction_from_vector(op, SubEigenCertificate(inf.p, low, math.nan, root))
        if inf or grid_check(op, phi, low, tol=1e-9).passed:
            disagreements += 1
    trunc_ok = all(truncate_drift(lambda x: x, r, A0, e).rate == r + e * A0
                   for r, A0, e in [(0.2, 0.07, 0.5), (0.1, 1 / 1200, 1.0), (0.3, 2.0, 1e-3)])
    k = lambda x, y: np.exp(-(x - y) ** 2) * (1 + x)
    h = lambda x: 0.5 + x ** 3
    back = switch_operator(switch_operator(k, h), lambda x: 1 / h(x))
    g = np.linspace(0.01, 3, 60)
    X, Y = np.meshgrid(g, g)
    dev = float(np.max(np.abs(back(X, Y) - k(X, Y))))
    ok = disagreements == 0 and trunc_ok and dev <= 1e-12
    verdict(9, ok, f"50 random operators, {disagreements} disagreements; truncation exact "
            f"{trunc_ok}; switch involution deviation {dev:.1e}", time.perf_counter() - t)
    assert ok


def test_criterion_10_determinism(verdict, tmp_path):
    t = time.perf_counter()
    commands = {
        "gibbs-certify": ["--model", "caseA", "--K", "0"],
        "logistic-certify": ["--a", "2", "--replicas", "20000"],
        "drift-verify": ["--model", "caseB", "--K", "0", "--replicas", "20000"],
    }
    same = {}
    for cmd, args in commands.items():
        blobs = []
        for run, workers in enumerate(("1", "1", "4")):
            out = tmp_path / f"{cmd}-{run}.json"
            main([cmd, *args, "--workers", workers, "--out", str(out)])
            blobs.append(out.read_bytes())
        same[cmd] = len(set(blobs)) == 1
    ok = all(same.values())
    verdict(10, ok, "bit-identical reports (2 runs, workers 1 and 4): "
            + ", ".join(f"{c} {s}" for c, s in same.items()), time.perf_counter() - t)
    assert ok
