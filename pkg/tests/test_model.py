import numpy as np
import pytest

from dobbench.errors import ConfigError, NotHurwitzError
from dobbench.linalg import is_hurwitz
from dobbench.model import (NominalModel, OuterController, PlantModel, Signal, StateFunction,
                            assemble_As_B, controller_eval, lumped_disturbance, plant_deriv)


def plant(**kw):
    base = dict(nu=2, phi=[0.0, 0.0], psi=[0.0], S=[[-1.0]], G=[1.0], g=1.0, g_lo=0.5, g_hi=2.0)
    base.update(kw)
    return PlantModel(**base)


def test_plant_equilibrium():
    xd, zd, y = plant_deriv(plant(), [0.0, 0.0], [0.0], 0.0)
    assert np.all(xd == 0) and np.all(zd == 0) and y == 0


def test_plant_companion_form():
    xd, _, y = plant_deriv(plant(), [1.0, 2.0], [0.0], 3.0)
    np.testing.assert_array_equal(xd, [2.0, 3.0])
    assert y == 1.0


def test_internal_dynamics():
    _, zd, _ = plant_deriv(plant(), [2.0, 0.0], [1.0], 0.0)
    np.testing.assert_array_equal(zd, [1.0])


def test_plant_rejects_nonfinite():
    with pytest.raises(ConfigError):
        plant_deriv(plant(), [np.nan, 0.0], [0.0], 0.0)


def test_plant_validation():
    with pytest.raises(ConfigError):
        plant(g=3.0)
    with pytest.raises(ConfigError):
        plant(g_lo=-1.0)
    with pytest.raises(NotHurwitzError):
        plant(S=[[0.5]])


def test_static_controller():
    ctrl = OuterController([], [], [], 2.0)
    th, ur = controller_eval(ctrl, [], 0.25, 1.0)
    assert th.size == 0 and ur == pytest.approx(1.5)


def test_dynamic_controller():
    ctrl = OuterController([[-1.0]], [1.0], [1.0], 0.0)
    th, ur = controller_eval(ctrl, [0.0], 0.0, 1.0)
    np.testing.assert_array_equal(th, [1.0])
    assert ur == 0.0
    th, ur = controller_eval(OuterController([[-1.0]], [1.0], [1.0], 3.0), [0.0], 0.7, 0.7)
    assert np.all(th == 0) and ur == 0


def nominal_components(scenario, chi, r):
    """Nominal loop derivative from the component equations, in [x; z_bar; theta; z] order."""
    nom, ctrl, p = scenario.nominal, scenario.controller, scenario.plant
    sx, szb, sth, sz = scenario.aug.slices()
    x, zb, th, z = chi[sx], chi[szb], chi[sth], chi[sz]
    nominal_plant = PlantModel(p.nu, nom.phi_bar, nom.psi_bar, nom.S_bar, nom.G_bar, nom.g_bar,
                               nom.g_bar, nom.g_bar)
    thd, u = controller_eval(ctrl, th, x[0], r)
    xd, zbd, _ = plant_deriv(nominal_plant, x, zb, u)
    zd = p.S @ z + p.G * x[0]
    return np.concatenate([xd, zbd, thd, zd])


def test_As_matches_components(bench, rng):
    sc = bench.scenario
    A, B = sc.aug.A_s, sc.aug.B
    for _ in range(50):
        chi = rng.normal(size=A.shape[0]) * 3
        r = rng.normal()
        np.testing.assert_allclose(A @ chi + B * r, nominal_components(sc, chi, r), atol=1e-12)
    assert np.all(A @ np.zeros(A.shape[0]) + B * 0.0 == 0)


def test_row_nu_identity(bench, rng):
    sc = bench.scenario
    nom, ctrl, nu = sc.nominal, sc.controller, sc.plant.nu
    sx, szb, sth, _ = sc.aug.slices()
    for _ in range(50):
        chi, r = rng.normal(size=sc.aug.n_e), rng.normal()
        x, zb, th = chi[sx], chi[szb], chi[sth]
        want = nom.phi_bar @ x + nom.psi_bar @ zb + nom.g_bar * (ctrl.L @ th + ctrl.D * (r - x[0]))
        assert (sc.aug.A_s @ chi + sc.aug.B * r)[nu - 1] == pytest.approx(want, abs=1e-12)


def test_benchmark_As_hurwitz(bench):
    ok, margin = is_hurwitz(bench.scenario.aug.A_s)
    assert ok and margin < 0


def test_unstable_nominal_loop_rejected(bench):
    sc = bench.scenario
    bad = OuterController([[0.0]], [1.0], [2.0], -5.0)
    with pytest.raises(NotHurwitzError, match="eigenvalue"):
        assemble_As_B(sc.plant, sc.nominal, bad)


def test_nominal_loop_trajectories_agree(bench):
    sc = bench.scenario
    A, B = sc.aug.A_s, sc.aug.B
    h, n = 1e-3, 10000
    a = np.zeros(A.shape[0])
    b = a.copy()

    def rk4(f, y):
        k1 = f(y); k2 = f(y + 0.5 * h * k1); k3 = f(y + 0.5 * h * k2); k4 = f(y + h * k3)
        return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    for _ in range(n):
        a = rk4(lambda y: A @ y + B * 1.0, a)
        b = rk4(lambda y: nominal_components(sc, y, 1.0), b)
    assert np.max(np.abs(a - b)) < 1e-9


def test_lumped_disturbance_examples():
    nom = NominalModel([0.0, 0.0], [0.0], 1.0, [[-1.0]], [1.0])
    matched = plant()
    x, z, zb = np.array([0.3, -0.2]), np.array([0.1]), np.array([0.4])
    assert lumped_disturbance(matched, nom, x, z, zb, 2.0) == pytest.approx(0.0)
    mismatched = plant(g=2.0, g_hi=2.0)
    assert lumped_disturbance(mismatched, nom, np.zeros(2), np.zeros(1), np.zeros(1), 3.0) == pytest.approx(1.5)
    t = 0.7
    assert lumped_disturbance(matched, nom, x, z, zb, 2.0, d=np.sin(t), t=t) == pytest.approx(np.sin(t))


def test_signal_terms():
    s = Signal([{"kind": "constant", "value": 1.0}, {"kind": "sin", "amp": 0.5, "freq": 2.0},
                {"kind": "polynomial", "coeffs": [0.0, 1.0, 3.0]}])
    t = np.array([0.0, 0.4, 1.3])
    val, der = s(t)
    np.testing.assert_allclose(val, 1 + 0.5 * np.sin(2 * t) + t + 3 * t**2)
    np.testing.assert_allclose(der, np.cos(2 * t) + 1 + 6 * t)
    with pytest.raises(ConfigError):
        Signal([{"kind": "square"}])


def test_state_function_gradient(rng):
    f = StateFunction([{"kind": "sin", "source": "x1", "coef": 0.3, "freq": 1.5},
                       {"kind": "tanh", "source": "z1", "coef": -0.2, "freq": 2.0},
                       {"kind": "power", "source": "x2", "coef": 0.1, "power": 2},
                       {"kind": "cos", "source": "t", "coef": 0.5, "freq": 3.0}], 2, 1)
    for _ in range(10):
        x, z, t = rng.normal(size=2), rng.normal(size=1), rng.uniform(0, 5)
        gx, gz, gt = f.gradient(x, z, t)
        eps = 1e-6
        for k in range(2):
            dx = np.zeros(2); dx[k] = eps
            assert gx[k] == pytest.approx((f(x + dx, z, t) - f(x - dx, z, t)) / (2 * eps), abs=1e-7)
        assert gz[0] == pytest.approx((f(x, z + eps, t) - f(x, z - eps, t)) / (2 * eps), abs=1e-7)
        assert gt == pytest.approx((f(x, z, t + eps) - f(x, z, t - eps)) / (2 * eps), abs=1e-7)
