import numpy as np
import pytest
from dataclasses import replace

from dobbench.dob import QFilterConfig
from dobbench.errors import NotHurwitzError
from dobbench.linalg import build_companion, build_M, is_hurwitz, unit
from dobbench.model import NominalModel
from dobbench.scenario import build
from dobbench.sim import SimConfig, integrate
from dobbench.transform import (TransformAnalysis, TransformedState, build_blocks, check_fast_hurwitz,
                                forward_transform, transformed_deriv)


@pytest.fixture(scope="module")
def ta(bench):
    return TransformAnalysis(bench.scenario, bench.qfilter)


def parts(bench, g=1.0, tau=0.05):
    sc = bench.scenario
    return build_blocks(sc.plant, sc.nominal, sc.controller, bench.qfilter, g, tau)


def test_A12_only_row_nu(bench):
    b = parts(bench, g=1.1)
    nu = bench.scenario.plant.nu
    rows = np.flatnonzero(np.any(b.A12 != 0, axis=1))
    np.testing.assert_array_equal(rows, [nu - 1])
    np.testing.assert_allclose(b.A12[nu - 1], -1.1 * bench.qfilter.a0 * b.C1)


def test_A_f_composition(bench):
    b = parts(bench)
    np.testing.assert_array_equal(b.A_f, np.block([[b.A11, b.A12], [b.A21, b.A22]]))
    assert is_hurwitz(b.A_f)[0]
    assert b.A_f.shape == (6, 6)


def test_zero_phi_bar_kills_coupling_rows(bench):
    sc = bench.scenario
    nom = NominalModel([0.0, 0.0], [0.4], 1.0, [[-2.0]], [1.0])
    b = build_blocks(sc.plant, nom, sc.controller, bench.qfilter, 1.0, 0.3)
    assert not b.Cq_bold.any() and not b.Cbar_bold.any()


def test_unit_tau_reduces_to_C1_T1(bench):
    b = parts(bench, tau=1.0)
    q = bench.qfilter
    np.testing.assert_allclose(q.Cq(1.0), b.C1)
    np.testing.assert_allclose(q.T(1.0), b.T1)
    np.testing.assert_allclose(np.diag(b.Delta), 1.0)


def test_fast_block_hurwitz(bench, bench_doc):
    sc = bench.scenario
    assert check_fast_hurwitz(sc.plant, sc.nominal, sc.controller, bench.qfilter) < 0
    doc = dict(bench_doc)
    doc["plant"] = dict(doc["plant"], g_hi=50.0)
    bad = build(doc)
    with pytest.raises(NotHurwitzError, match="g="):
        check_fast_hurwitz(bad.scenario.plant, bad.scenario.nominal, bad.scenario.controller, bad.qfilter)


def test_alpha_norm_example():
    # l = 2, a = [1, 2]: T_1 e_l = [2; 1], so ||alpha|| = sqrt(5)
    nom = NominalModel([-1.0], [0.4], 1.0, [[-2.0]], [1.0])
    from dobbench.model import OuterController, PlantModel
    plant = PlantModel(1, [-1.0], [0.4], [[-2.0]], [1.0], 1.0, 0.8, 1.2)
    b = build_blocks(plant, nom, OuterController([], [], [], 2.0), QFilterConfig(2, 2, (1, 2), tau=0.1), 1.0, 0.1)
    assert np.linalg.norm(b.alpha) == pytest.approx(np.sqrt(5))


def test_definition_inversion(rng):
    nu, l, tau = 2, 3, 0.07
    x, Xi_xi, Xi_z = rng.normal(size=nu), rng.normal(size=5), rng.normal()
    Dinv = np.diag([tau ** -(k + 1) for k in range(l)])
    q = np.concatenate([x, np.zeros(l - nu)]) + tau ** (nu + 1) * Dinv @ unit(nu + 1, l) * Xi_xi[nu - 1]
    p = tau ** (l + 1) * Dinv @ unit(1, l) * Xi_z
    ts = forward_transform(q, p, x, Xi_xi, Xi_z, np.zeros(5), nu, tau)
    assert np.max(np.abs(ts.xi)) < 1e-12 and np.max(np.abs(ts.zeta)) < 1e-12


def test_forward_inverse_roundtrip(ta, bench, rng):
    L = ta.layout
    for _ in range(20):
        s = rng.normal(size=L.size)
        s[L.chi_n] = rng.normal(size=L.ne)
        t, v = rng.uniform(0, 5), rng.uniform(-0.05, 0.05)
        ts = ta.forward(s, t, v)
        back = ta.inverse(ts, s[L.chi_n], t, v)
        np.testing.assert_allclose(back, s, atol=1e-9)
        np.testing.assert_array_equal(ts.eta, np.concatenate([ts.xi, ts.zeta]))


def test_row_nu_identity(ta, bench, rng):
    sc = bench.scenario
    nom, D, nu = sc.nominal, sc.controller.D, sc.plant.nu
    L = ta.layout
    for _ in range(100):
        s = rng.normal(size=L.size) * 2
        t, v = rng.uniform(0, 10), rng.uniform(-0.1, 0.1)
        x, _, theta, z_bar, *_ = ta.split(s)
        ur = ta.u_r(theta, x, t, v)
        Xi = ta.xi_star(L.chi(s), t)
        want = nom.phi_bar @ x + nom.psi_bar @ z_bar + nom.g_bar * (ur + D * v)
        assert Xi[nu - 1] - want == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("tau", [0.1, 1.0, 2.0])
def test_filter_output_identities(rng, tau):
    for _ in range(20):
        l = int(rng.integers(2, 6))
        m = int(rng.integers(2, l + 1))
        nu = int(rng.integers(1, m))
        q = QFilterConfig(l, m, tuple(rng.uniform(0.2, 3, l)), tuple(rng.uniform(0, 2, l - m)), tau=tau)
        Ti = q.T_inv()
        lhs = build_M(q.Cq()[None, :], l, nu) @ Ti
        rhs = build_M(q.Cbar()[None, :], l, nu) @ Ti + np.eye(nu, l)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
        A_l, _ = build_companion(l)
        xpad = np.concatenate([rng.normal(size=nu), np.zeros(l - nu)])
        assert abs(q.Cq() @ np.linalg.matrix_power(A_l, nu) @ Ti @ xpad) < 1e-12
        assert abs(q.Cbar() @ Ti @ (unit(1, l) * rng.normal())) < 1e-12


def test_zero_point_has_zero_derivative(bench):
    b = parts(bench)
    ts = TransformedState(np.zeros(3), np.zeros(3), np.zeros(5))
    for out in transformed_deriv(ts, b, np.zeros(5), 0.0, 0.0, 0.0, 2):
        assert not np.any(out)


def test_noise_terms_enter_linearly(bench, rng):
    b = parts(bench, g=1.1)
    l, nu = 3, 2
    ts = TransformedState(rng.normal(size=l), rng.normal(size=l), rng.normal(size=5))
    Xi, xd, zd, v = rng.normal(size=5), rng.normal(), rng.normal(), 0.03
    noisy = transformed_deriv(ts, b, Xi, xd, zd, v, nu)
    clean = transformed_deriv(ts, b, Xi, xd, zd, 0.0, nu)
    np.testing.assert_allclose(noisy[0] - clean[0], (b.alpha[:l] / b.tau**nu + b.N_xi) * v, atol=1e-12)
    np.testing.assert_allclose(noisy[1] - clean[1], b.N_zeta * v, atol=1e-12)
    np.testing.assert_allclose(noisy[2] - clean[2], b.N_e * v, atol=1e-12)


def fd_errors(bench, h, times):
    sc, q = bench.scenario, bench.qfilter
    cfg = SimConfig(step=h, horizon=2.0, noise="none", record_every=1)
    traj = integrate(sc, q, cfg, s_bar=16.4)
    assert not traj.sat_active.any()
    ta = TransformAnalysis(sc, q)
    out = []
    for t in times:
        k = int(round(t / h))
        Y = [ta.forward(traj.states[j], traj.times[j], 0.0) for j in (k - 1, k + 1)]
        fd = np.concatenate([(b - a) / (2 * h) for a, b in zip(Y[0], Y[1])])
        txi, tzeta, edot = ta.deriv(traj.states[k], traj.times[k], 0.0)
        edot = edot + sc.aug.A_s @ ta.layout.error(traj.states[k])
        an = np.concatenate([txi / q.tau, tzeta / q.tau, edot])
        out.append((t, np.max(np.abs(fd - an)), np.max(np.abs(an))))
    return out


def test_finite_difference_residual(bench):
    """Centered differences of the forward map along a trajectory against the analytic derivative."""
    times = np.linspace(0.02, 1.9, 25)
    rows = fd_errors(bench, 1e-4, times)
    # the initial fast transient has derivatives of order 50; compare relative there
    assert max(err / (1 + mag) for _, err, mag in rows) < 1e-5
    assert max(err for t, err, _ in rows if t >= 0.2) < 1e-5
    coarse = fd_errors(bench, 2e-4, times[:5])
    ratios = [c[1] / f[1] for c, f in zip(coarse, rows[:5])]
    assert min(ratios) > 3.5 and max(ratios) < 4.5      # second order


def test_dhat_identity_trivial(matched):
    ta = TransformAnalysis(matched.scenario, matched.qfilter)
    res, mag = ta.dhat_identity_residual(np.zeros(ta.layout.size), 0.0, 0.0)
    assert res < 1e-14 and mag == 0


@pytest.mark.parametrize("mu", [0.0, 0.01])
def test_dhat_identity_along_trajectory(bench, mu):
    sc, q = bench.scenario, bench.qfilter
    cfg = SimConfig(step=1e-4, horizon=3.0, noise="square", mu=mu, period=0.01, record_every=37)
    traj = integrate(sc, q, cfg, s_bar=16.4)
    ta = TransformAnalysis(sc, q)
    from dobbench.sim import noise_sequence
    vseq = noise_sequence(cfg, cfg.nsteps, cfg.step)
    worst = 0.0
    for k in range(traj.times.size):
        if traj.sat_active[k]:
            continue
        res, mag = ta.dhat_identity_residual(traj.states[k], traj.times[k], vseq[min(k * 37, vseq.size - 1)])
        worst = max(worst, res / (1 + mag))
    assert worst < 1e-8
