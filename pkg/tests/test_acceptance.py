"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from oselab.bounds import (
    MetricRates,
    PairRates,
    TripleRates,
    metric_lemma_bound,
    pair_lemma_bound,
    theorem_exponents,
    triple_lemma_bounds,
    triple_lemma_exponents,
)
from oselab.cocycle import holder_iterate_constant, verify_iterate_holder
from oselab.grassmann import orthonormalize, subspace_distance
from oselab.harness import bundled_config, holder_experiment, iterate_pairs, run_experiment
from oselab.oseledets import default_window, lyapunov_spectrum, splitting
from oselab.sweeps import run_lemma_sweep
from oselab.systems import LinearFlow, SystemSpec, flow_time_map, make_system, rotation

CAT = [[2.0, 1.0], [1.0, 1.0]]
CONSTANT_SYSTEMS = {"diag(3, 1/3)": [[3.0, 0.0], [0.0, 1 / 3]], "[[2,1],[1,1]]": CAT}
X0 = np.array([0.123, 0.456])


def rel(x, y):
    return abs(x - y) / abs(y)


@pytest.fixture(scope="module")
def holder_runs():
    """Criterion-6 experiment at 1 and 8 threads, run once for criteria 6, 8 and 9."""
    cfg = bundled_config("perturbed_cat")
    runs = {}
    for threads in (1, 8):
        t0 = time.perf_counter()
        res = run_experiment(cfg.with_overrides(threads=threads), write=False)
        runs[threads] = (res, time.perf_counter() - t0)
    return runs


def test_criterion_1_formula_fidelity(criterion):
    with criterion(1, "worked examples of every closed-form bound and exponent") as c:
        t0 = time.perf_counter()
        checks = {
            "pair": (pair_lemma_bound(PairRates(1, 2, 1, 1, 4, 1 / 16)), 1.5),
            "metric": (metric_lemma_bound(MetricRates(1, math.e, 1, 1, math.e**2, math.e**-4)),
                       (2 + math.e**2) * math.e**-2),
            "c1": (holder_iterate_constant(1, 1, 2, 0.1), 4.0),
            "omega": (theorem_exponents([-1, 1], 0.1, 3.0, False)[0].exponent, 1.8 / 3.9),
            "beta": (theorem_exponents([-1, 0, 1], 0.1, 3.0, True)[1].exponent, (0.8 / 2.9) ** 2),
        }
        tp = TripleRates(0.2, 0.5, 1, 2, 4, 8, C=1, d=1, a=8, delta=1e-4)
        bE, bF, bG = triple_lemma_bounds(tp)
        checks["boundE"] = (bE, 0.6)
        checks["boundG"] = (bG, 6 * 1e-4**0.2)
        checks["boundF"] = (bF, 4.5 * 5**1.5 * 4 / (2 * 0.5**0.5) * 1e-4 ** (1 / 6))
        worst = max(rel(a, b) for a, b in checks.values())
        assert worst <= 1e-9, {k: rel(a, b) for k, (a, b) in checks.items()}
        exps = triple_lemma_exponents(tp)
        l2 = math.log(2)
        exact = (l2 / math.log(16), l2 / math.log(4), l2 / math.log(32), l2 * l2 / (math.log(8) * math.log(4)))
        err = max(abs(a - b) for a, b in zip(exps, exact))
        assert err <= 1e-12
        assert max(abs(a - b) for a, b in zip(exps, (0.25, 0.5, 0.2, 1 / 6))) <= 1e-12
        elapsed = time.perf_counter() - t0
        assert elapsed < 0.5
        c.detail += f"; worst rel err {worst:.1e}, triple exponent err {err:.1e}, {elapsed * 1e3:.1f} ms"


def test_criterion_2_spectra(criterion):
    with criterion(2, "constant-matrix spectra vs eigenvalue logs (n = 2000)") as c:
        t0 = time.perf_counter()
        worst, worst_det = 0.0, 0.0
        for M in CONSTANT_SYSTEMS.values():
            sys = make_system(SystemSpec("constant", {"matrix": M}))
            spec = lyapunov_spectrum(sys, X0, n=2000)
            truth = np.sort(np.log(np.abs(np.linalg.eigvals(np.array(M)))))
            worst = max(worst, float(np.max(np.abs(np.subtract(spec.exponents, truth)))))
            # (1/n) log|det A^n| = log|det M| for a constant generator
            det_rate = math.log(abs(np.linalg.det(np.array(M))))
            worst_det = max(worst_det, abs(spec.determinant_rate() - det_rate))
        elapsed = time.perf_counter() - t0
        assert worst <= 1e-8 and worst_det <= 1e-9 and elapsed < 1.0
        c.detail += f"; max exponent err {worst:.1e}, det residual {worst_det:.1e}, {elapsed:.2f} s"


def test_criterion_3_splittings(criterion):
    with criterion(3, "constant-matrix splittings vs eigendirections") as c:
        worst_d, worst_flag, worst_eq = 0.0, 0.0, 0.0
        for M in CONSTANT_SYSTEMS.values():
            sys = make_system(SystemSpec("constant", {"matrix": M}))
            spec = lyapunov_spectrum(sys, X0)
            data = splitting(sys, X0, default_window(spec), spec)
            w, V = np.linalg.eig(np.array(M))
            order = np.argsort(np.abs(w))
            for E, j in zip(data.splitting, order):
                worst_d = max(worst_d, subspace_distance(E, orthonormalize(V[:, [j]])))
            worst_flag = max(worst_flag, data.flag_residual())
            worst_eq = max(worst_eq, data.equivariance_defect)
        assert worst_d <= 1e-8 and worst_flag <= 1e-8 and worst_eq <= 1e-6
        c.detail += f"; dist {worst_d:.1e}, flag residual {worst_flag:.1e}, equivariance {worst_eq:.1e}"


def test_criterion_4_lemma_sweeps(criterion):
    with criterion(4, "1000 pair + 1000 triple randomized instances") as c:
        t0 = time.perf_counter()
        pair = run_lemma_sweep("pair", 1000, seed=0)
        triple = run_lemma_sweep("triple", 1000, seed=0)
        elapsed = time.perf_counter() - t0
        for res in (pair, triple):
            assert res.accepted == 1000
            assert res.violations == 0
            # hypothesis-violating instances exist and are rejected, never passed
            assert res.rejected > 0
            for r in res.rows:
                if r.status == "rejected":
                    assert r.clause and math.isnan(r.measured)
                else:
                    assert r.measured <= r.bound + 1e-9 * r.bound
        assert elapsed < 60
        c.detail += (f"; violations {pair.violations}/{triple.violations}, rejected "
                     f"{pair.rejected}/{triple.rejected}, {elapsed:.1f} s")


def test_criterion_5_iterate_holder_on_shifts(criterion):
    with criterion(5, "shift_iid and shift_holder, 500 pairs, n_max = 10") as c:
        specs = [
            SystemSpec("shift_iid", {"matrices": [np.diag([2.0, 0.5]).tolist(), rotation(0.3).tolist()]}),
            SystemSpec("shift_holder", {"diag": [2, 0.5], "rho": 0.2, "nu": 0.5}),
        ]
        parts = []
        for spec in specs:
            sys = make_system(spec)
            pairs = iterate_pairs(sys, 500, seed=5)
            rep = verify_iterate_holder(sys, pairs, 10)
            assert len(pairs) == 500
            assert rep.context["violations"] == 0 and rep.passed
            parts.append(f"{spec.kind} margin {rep.margin:.3g}")
        c.detail += "; " + ", ".join(parts)


def test_criterion_6_end_to_end(criterion, holder_runs):
    with criterion(6, "perturbed_diagonal over the cat map, Hölder experiment") as c:
        res, elapsed = holder_runs[1]
        rep = res.report
        frac = rep["verdict"]["pointwise_pass_fraction"]
        slope = rep["fit"]["slope"]
        target = rep["prediction"]["predicted_slope"]
        assert rep["block_summary"]["n_samples"] == 2000
        assert rep["prediction"]["nu"] == 0.5
        assert rep["fit"]["n_pairs"] >= 10
        assert frac >= 0.99
        assert slope >= target - 0.1
        assert elapsed < 300
        c.detail += (f"; ell {rep['block_summary']['ell']:g}, pairs {rep['fit']['n_pairs']}, pointwise "
                     f"{frac:.3f}, slope {slope:.4f} vs nu*omega {target:.4f}, R^2 {rep['fit']['r2']:.3f}, "
                     f"{elapsed:.1f} s")


def test_criterion_7_flow_reduction(criterion):
    with criterion(7, "linear flow rates (-1, 1) at tau in {0.5, 1, 2}") as c:
        worst = 0.0
        for tau in (0.5, 1.0, 2.0):
            sys = flow_time_map(LinearFlow(rates=(-1.0, 1.0)), tau)
            spec = lyapunov_spectrum(sys, X0, n=2000)
            worst = max(worst, float(np.max(np.abs(np.subtract(spec.exponents, [-tau, tau])))))
        assert worst <= 1e-8
        c.detail += f"; max err {worst:.1e}"


def test_criterion_8_block_monotonicity(criterion, holder_runs):
    with criterion(8, "passing fraction monotone in ell and horizon") as c:
        prof = holder_runs[1][0].pairs.profile
        ells = (1, 2, 4, 8, 16)
        horizons = (10, 25, 50)
        table = {(e, h): prof.fraction(e, h) for e in ells for h in horizons}
        for h in horizons:
            seq = [table[e, h] for e in ells]
            assert all(a <= b for a, b in zip(seq, seq[1:])), (h, seq)
        for e in ells:
            seq = [table[e, h] for h in horizons]
            assert all(a >= b for a, b in zip(seq, seq[1:])), (e, seq)
        c.detail += "; at horizon 50: " + ", ".join(f"ell {e}: {table[e, 50]:.3f}" for e in ells)


def test_criterion_9_determinism(criterion, holder_runs):
    with criterion(9, "pair CSV byte-identical at 1 and 8 threads") as c:
        a, b = holder_runs[1][0].csv_text, holder_runs[8][0].csv_text
        assert a.encode() == b.encode()
        c.detail += f"; {len(a.encode())} bytes, {len(a.splitlines()) - 1} pairs"
