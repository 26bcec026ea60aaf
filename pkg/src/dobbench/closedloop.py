"""Stacked closed-loop state and its affine-plus-saturation realization.

The full loop (plant, outer controller, DOB, nominal copy) is linear apart
from ``f_d`` and the saturation, so it is stored as::

    s_dot = M s + b_r r(t) + b_d d(t) + b_v v + b_dhat dhat + b_fd f_d(x, z, t)
    dhat  = sat(c_w . s)

which is what the compiled kernels evaluate.  :func:`reference_rhs` gives
the same derivative assembled from the component equations and serves as
the oracle for the matrix form.
"""
from typing import NamedTuple

import numpy as np

from .dob import compute_w, compute_yp, dhat, dob_deriv, dob_maps, DobState
from .errors import ConfigError
from .model import controller_eval, plant_deriv


class Layout:
    """Index map of ``s = [x; z; theta; z_bar; q; p; chi_n]``."""

    def __init__(self, nu, nz, nc, l):
        self.nu, self.nz, self.nc, self.l = nu, nz, nc, l
        self.ne = nu + 2 * nz + nc
        o = 0
        self.x = slice(o, o + nu); o += nu
        self.z = slice(o, o + nz); o += nz
        self.theta = slice(o, o + nc); o += nc
        self.z_bar = slice(o, o + nz); o += nz
        self.q = slice(o, o + l); o += l
        self.p = slice(o, o + l); o += l
        self.chi_n = slice(o, o + self.ne); o += self.ne
        self.size = o
        idx = np.arange(o)
        # chi = [x; z_bar; theta; z]
        self.chi_idx = np.concatenate([idx[self.x], idx[self.z_bar], idx[self.theta], idx[self.z]])
        self.chi_n_idx = idx[self.chi_n]

    def chi(self, s):
        return s[..., self.chi_idx]

    def error(self, s):
        return s[..., self.chi_idx] - s[..., self.chi_n_idx]


class ClosedLoop(NamedTuple):
    M: np.ndarray
    b_r: np.ndarray
    b_d: np.ndarray
    b_v: np.ndarray
    b_dhat: np.ndarray
    b_fd: np.ndarray
    c_w: np.ndarray
    s_bar: float
    layout: Layout


def make_layout(scenario, qcfg):
    p = scenario.plant
    return Layout(p.nu, p.nz, scenario.controller.n_c, qcfg.l)


def build_closed_loop(scenario, qcfg, s_bar=None):
    plant, nom, ctrl = scenario.plant, scenario.nominal, scenario.controller
    qcfg.check_degree(plant.nu)
    if s_bar is None:
        s_bar = qcfg.s_bar
    if s_bar is None:
        raise ConfigError("saturation level s_bar is not set")
    L = make_layout(scenario, qcfg)
    nu, l = plant.nu, qcfg.l
    maps = dob_maps(qcfg, nom, nu)
    n = L.size
    M = np.zeros((n, n))
    b_r, b_d, b_v, b_dh, b_fd, c_w = (np.zeros(n) for _ in range(6))
    xi = np.arange(n)[L.x]
    xnu = xi[-1]
    # plant chain
    M[L.x, L.x] = np.eye(nu, k=1)
    M[xnu, L.x] += plant.phi
    M[xnu, L.z] += plant.psi
    # g * u_r with u_r = L theta + D (r - x1 - v)
    M[xnu, L.theta] += plant.g * ctrl.L
    M[xnu, xi[0]] -= plant.g * ctrl.D
    b_r[xnu] = plant.g * ctrl.D
    b_v[xnu] = -plant.g * ctrl.D
    b_d[xnu] = plant.g
    b_dh[xnu] = -plant.g
    b_fd[xnu] = 1.0
    M[L.z, L.z] = plant.S
    M[L.z, xi[0]] = plant.G
    # outer controller
    M[L.theta, L.theta] = ctrl.J
    M[L.theta, xi[0]] = -ctrl.K
    b_r[L.theta] = ctrl.K
    b_v[L.theta] = -ctrl.K
    # DOB: inverse nominal model driven by y + v
    M[L.z_bar, L.z_bar] = nom.S_bar
    M[L.z_bar, xi[0]] = nom.G_bar
    b_v[L.z_bar] = nom.G_bar
    qi = np.arange(n)[L.q]
    M[L.q, L.q] = np.eye(l, k=1)
    M[L.q, qi[0]] -= maps.kq
    M[L.q, xi[0]] += maps.kq
    b_v[L.q] = maps.kq
    pi = np.arange(n)[L.p]
    M[L.p, L.p] = np.eye(l, k=1)
    M[pi[-1], L.p] -= maps.kp
    M[pi[-1], L.theta] += ctrl.L
    M[pi[-1], xi[0]] -= ctrl.D
    b_r[pi[-1]] = ctrl.D
    b_v[pi[-1]] = -ctrl.D
    b_dh[pi[-1]] = -1.0
    # disturbance estimate w - y_p
    c_w[L.z_bar] = maps.w_zbar
    c_w[L.q] = maps.w_q
    c_w[L.p] = -maps.yp_p
    # nominal copy
    M[L.chi_n, L.chi_n] = scenario.aug.A_s
    b_r[L.chi_n] = scenario.aug.B
    return ClosedLoop(M, b_r, b_d, b_v, b_dh, b_fd, c_w, float(s_bar), L)


def initial_state(scenario, qcfg):
    """Matched initial condition: DOB states at zero, ``chi_n(t0) = chi(t0)``."""
    L = make_layout(scenario, qcfg)
    s = np.zeros(L.size)
    s[L.x] = scenario.x0
    s[L.z] = scenario.z0
    s[L.theta] = scenario.theta0
    s[L.chi_n] = L.chi(s)
    return s


def reference_rhs(scenario, qcfg, t, s, v, s_bar=None):
    """Component-wise closed-loop derivative; returns ``(s_dot, w - y_p, active)``."""
    plant, nom, ctrl = scenario.plant, scenario.nominal, scenario.controller
    L = make_layout(scenario, qcfg)
    s_bar = qcfg.s_bar if s_bar is None else s_bar
    x, z, theta = s[L.x], s[L.z], s[L.theta]
    state = DobState(s[L.z_bar], s[L.q], s[L.p])
    r, _ = scenario.r(t)
    d, _ = scenario.d(t)
    y_meas = x[0] + v
    theta_dot, u_r = controller_eval(ctrl, theta, y_meas, float(r))
    w = compute_w(qcfg, nom, plant.nu, state.z_bar, state.q)
    y_p = compute_yp(qcfg, state.p)
    est, active = dhat(w, y_p, s_bar)
    u = u_r - est
    xdot, zdot, _ = plant_deriv(plant, x, z, u, float(d), t)
    zb_dot, q_dot, p_dot = dob_deriv(qcfg, nom, state, y_meas, u)
    chin_dot = scenario.aug.A_s @ s[L.chi_n] + scenario.aug.B * r
    out = np.concatenate([xdot, zdot, theta_dot, zb_dot, q_dot, p_dot, chin_dot])
    return out, w - y_p, active
