"""Acceptance criteria on the packaged benchmark, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` to see the lines.
"""
import json
import time
from importlib import resources

import numpy as np
import pytest
from scipy.linalg import expm

from dobbench import bounds as B
from dobbench.cli import main
from dobbench.dob import QFilterConfig
from dobbench.linalg import build_companion, build_M, build_T, is_hurwitz, upper_unit_inverse, unit
from dobbench.sim import integrate, step_for_tau, sweep_tau
from dobbench.verify import transform_cross_check, verify_design

BENCH = str(resources.files("dobbench").joinpath("data/benchmark.json"))


@pytest.fixture
def verdict(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {num}: {detail}"
    return emit


@pytest.fixture(scope="module")
def design0(bench):
    return B.design_tau(bench.scenario, bench.qfilter, bench.design)


@pytest.fixture(scope="module")
def s_bar(bench):
    return B.default_s_bar(bench.scenario, bench.qfilter, bench.design)


@pytest.fixture(scope="module")
def cross_checks(bench, s_bar):
    out = {}
    for mu in (0.0, 0.01):
        t0 = time.perf_counter()
        cc = transform_cross_check(bench.scenario, bench.qfilter, bench.sim.with_noise(mu, "square"), s_bar,
                                   horizon=5.0, step=1e-4)
        out[mu] = (cc, time.perf_counter() - t0)
    return out


def test_criterion_1_transform_equivalence(cross_checks, verdict):
    devs = {mu: cc.max_e_deviation for mu, (cc, _) in cross_checks.items()}
    secs = sum(t for _, t in cross_checks.values())
    ok = all(d < 1e-6 for d in devs.values()) and secs < 10.0
    verdict(1, ok, f"max deviation {max(devs.values()):.2e} (< 1e-6), {secs:.1f} s (< 10 s)")


def test_criterion_2_dhat_identity(cross_checks, verdict):
    res = max(cc.max_dhat_residual for cc, _ in cross_checks.values())
    n = sum(cc.samples for cc, _ in cross_checks.values())
    verdict(2, res < 1e-8, f"max relative residual {res:.2e} (< 1e-8) over {n} unsaturated samples")


def test_criterion_3_noise_free_recovery(bench, s_bar, verdict):
    taus = [0.2, 0.1, 0.05, 0.02, 0.01]
    cfg = bench.sim.with_noise(0.0)
    t0 = time.perf_counter()
    sups = [integrate(bench.scenario, bench.qfilter.with_tau(t), cfg, s_bar=s_bar,
                      step=step_for_tau(cfg, t)).sup_e for t in taus]
    secs = time.perf_counter() - t0
    ok = bool(np.all(np.diff(sups) < 0)) and sups[-1] < 0.1 and secs < 30.0
    verdict(3, ok, "sup e " + ", ".join(f"{s:.3g}" for s in sups) + f"; {secs:.1f} s (< 30 s)")


def test_criterion_4_noise_u_shape(bench, verdict):
    mu = 0.05
    cfg = bench.sim.with_noise(mu, "square")
    taus = np.geomspace(1e-4, 0.5, 15)
    t0 = time.perf_counter()
    sb = B.default_s_bar(bench.scenario, bench.qfilter, bench.design.with_mu(mu), mu=mu)
    reps = sweep_tau(bench.scenario, bench.qfilter, cfg, taus, s_bar=sb)
    secs = time.perf_counter() - t0
    sups = np.array([r.sup_e for r in reps])
    k = int(np.argmin(sups))
    ok = 0 < k < len(taus) - 1 and secs < 60.0
    verdict(4, ok, f"minimum {sups[k]:.3g} at tau={taus[k]:.3g} (grid index {k} of 0..14); "
                   f"ends {sups[0]:.3g} / {sups[-1]:.3g}; {secs:.1f} s (< 60 s)")


def test_criterion_5_guarantee(bench, design0, verdict):
    t0 = time.perf_counter()
    spec = bench.design.with_mu(design0.mu_star / 10)
    res = B.design_tau(bench.scenario, bench.qfilter, spec)
    ok = res.feasible and res.tau_lower < res.tau_upper
    detail = f"interval ({res.tau_lower:.3g}, {res.tau_upper:.3g})"
    if ok:
        v = verify_design(res, bench.scenario, bench.qfilter, bench.sim, n_probe=5, cross_check=False)
        ok = v.passed and len(v.probes) == 5
        detail += f", 5 probes pass={v.passed}, min margins T {v.min_margin_T:.3g} U {v.min_margin_U:.3g}"
    secs = time.perf_counter() - t0
    verdict(5, ok and secs < 60.0, detail + f"; {secs:.1f} s (< 60 s)")


def test_criterion_6_noise_free_lower_end(bench, design0, verdict):
    mus = design0.mu_star * np.array([0.5, 0.2, 0.1, 0.05, 0.01])     # decreasing
    lyap = B.worst_case_lyapunov(bench.scenario, bench.qfilter)
    lowers = [B.design_tau(bench.scenario, bench.qfilter, bench.design.with_mu(m), lyap=lyap).tau_lower
              for m in mus]
    ok = design0.tau_lower == 0.0 and all(lo > 0 for lo in lowers) and bool(np.all(np.diff(lowers) <= 0))
    verdict(6, ok, f"tau_lower(0) = {design0.tau_lower}; tau_lower along decreasing mu "
                   + ", ".join(f"{lo:.3g}" for lo in lowers))


def test_criterion_7_design_functions(design0, verdict):
    gc = design0.constants
    k0 = design0.k0
    failures = []
    for mu in (design0.mu_star * 0.1, 1e-3, 1.0):
        td = B.tau_dagger(mu, gc)
        grid = np.geomspace(td / 100, td * 100, 1000)
        vals = np.array([B.sigma_bar(mu, t, gc) for t in grid])
        i = int(np.argmin(vals))
        if not grid[max(i - 1, 0)] <= td <= grid[min(i + 1, 999)]:
            failures.append(f"tau_dagger off grid minimum at mu={mu:.3g}")
        d2 = np.array([B.sigma_bar_d2tau(mu, t, gc) for t in grid])
        if not np.all(d2 > 0):
            failures.append(f"convexity at mu={mu:.3g}")
        if abs(B.h_inv(B.h(mu, gc), gc) - mu) > 1e-8 * mu:
            failures.append(f"h round trip at mu={mu:.3g}")
    mu = 0.1 * design0.mu_star
    for tau in B.sigma_bar_roots(mu, k0, gc) + (B.tau_dagger(mu, gc),):
        mt = B.mu_tilde(k0, tau, gc)
        if not B.sigma_bar(0.99 * mt, tau, gc) < k0 <= B.sigma_bar(1.01 * mt, tau, gc):
            failures.append(f"mu_tilde consistency at tau={tau:.3g}")
    verdict(7, not failures, "; ".join(failures) or "tau_dagger, convexity, h round trip, mu_tilde all hold")


def test_criterion_8_numerics(bench, design0, verdict):
    rng = np.random.default_rng(8)
    lyap = B.worst_case_lyapunov(bench.scenario, bench.qfilter)
    worst = {"lyapunov": max(lyap.residual_f, lyap.residual_s)}
    hurwitz_ok = all(is_hurwitz(np.array(A, float))[0] is want for A, want in [
        ([[0, 1], [-2, -3]], True), ([[0, 1], [0, 0]], False), ([[1, 0], [0, -1]], False),
        ([[-1, 5], [0, -2]], True), ([[0, 1], [-1, 0]], False)])
    ident = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 7))
        a = rng.uniform(0.1, 5, n)
        tau = rng.uniform(0.05, 2.0)
        Dn = np.diag([tau ** -(k + 1) for k in range(n)])
        want = Dn @ upper_unit_inverse(build_T(a, 1.0)) @ np.linalg.inv(Dn)
        got = upper_unit_inverse(build_T(a, tau))
        ident = max(ident, np.max(np.abs(got - want)) / max(1.0, np.abs(want).max()))
        l = int(rng.integers(2, 6))
        m = int(rng.integers(2, l + 1))
        nu = int(rng.integers(1, m))
        q = QFilterConfig(l, m, tuple(rng.uniform(0.2, 3, l)), tuple(rng.uniform(0, 2, l - m)), tau=tau)
        Ti = q.T_inv()
        lhs = build_M(q.Cq()[None, :], l, nu) @ Ti
        rhs = build_M(q.Cbar()[None, :], l, nu) @ Ti + np.eye(nu, l)
        ident = max(ident, np.max(np.abs(lhs - rhs)))
    worst["identities"] = ident
    dc = 0.0
    for tau in (0.01, 0.05, 1.0):
        q = bench.qfilter.with_tau(tau)
        A_l, _ = build_companion(q.l)
        k = q.a0 / tau**q.l * q.T() @ unit(q.l, q.l)
        Aq = A_l - np.outer(k, unit(1, q.l))
        big = np.zeros((q.l + 1, q.l + 1))
        big[:q.l, :q.l], big[:q.l, q.l] = Aq, k * 0.7
        q_end = (expm(200 * tau * big) @ np.append(np.zeros(q.l), 1.0))[:q.l]
        dc = max(dc, abs(q_end[0] - 0.7) / 0.7)
    worst["dc_gain"] = dc
    ok = worst["lyapunov"] < 1e-10 and hurwitz_ok and ident < 1e-12 and dc < 1e-9
    verdict(8, ok, f"Lyapunov residual {worst['lyapunov']:.1e}, 2x2 Hurwitz verdicts {hurwitz_ok}, "
                   f"identities {ident:.1e}, DC gain error {dc:.1e}")


def test_criterion_9_falsification(capsys, tmp_path, design0, verdict):
    # same absolute noise level for both runs; only kappa1 is corrupted
    mu = f"{design0.mu_star / 10:.17g}"
    base_out, bad_out = tmp_path / "base.json", tmp_path / "bad.json"
    rc0 = main(["verify", "--scenario", BENCH, "--mu", mu, "--out", str(base_out)])
    rc1 = main(["verify", "--scenario", BENCH, "--mu", mu, "--kappa-scale", "kappa1=0.01", "--out", str(bad_out)])
    capsys.readouterr()
    m0 = json.loads(base_out.read_text())["verdict"] if base_out.exists() else None
    m1 = json.loads(bad_out.read_text())["verdict"] if bad_out.exists() else None
    shrink = None
    if m0 and m1:
        shrink = min((m0["min_margin_T"] - m1["min_margin_T"]) / abs(m0["min_margin_T"]),
                     (m0["min_margin_U"] - m1["min_margin_U"]) / abs(m0["min_margin_U"]))
    # "visibly shrink": both minimum margins drop by at least 10 % of their uncorrupted value
    ok = rc0 == 0 and (rc1 == 4 or (shrink is not None and shrink >= 0.10))
    shrink_text = "n/a" if shrink is None else f"{shrink:.2e}"
    verdict(9, ok, f"exit codes {rc0} -> {rc1}; relative margin shrink {shrink_text} (need exit 4 or >= 0.10)")
