"""Fast/slow coordinates of the DOB loop and their block matrices.

The change of variables maps the observer states ``(q, p)`` to the fast
states ``(xi, zeta)``; the slow state is the recovery error
``e = chi - chi_n``.  Everything here is an analysis-side computation that
needs the true plant parameters.
"""
from typing import NamedTuple

import numpy as np

from .closedloop import make_layout
from .errors import NotHurwitzError
from .linalg import build_companion, build_M, is_hurwitz, unit, upper_unit_inverse
from .model import lumped_disturbance, noise_input_vector


class BlockMatrices(NamedTuple):
    g: float
    tau: float
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    A_f: np.ndarray
    Cq_bold: np.ndarray       # 1 x l, multiplies xi
    Cbar_bold: np.ndarray     # 1 x n_e, multiplies Xi*_xi
    F1: np.ndarray
    F2: np.ndarray
    F: np.ndarray
    N_xi: np.ndarray
    N_zeta: np.ndarray
    N_e: np.ndarray
    N_eta: np.ndarray
    check_e: np.ndarray
    alpha: np.ndarray
    Cq_check: np.ndarray
    C1: np.ndarray
    T1: np.ndarray
    Cbar1: np.ndarray
    CAT1: np.ndarray          # C_1 A_l^nu T_1^{-1}
    Delta: np.ndarray


class TransformedState(NamedTuple):
    xi: np.ndarray
    zeta: np.ndarray
    e: np.ndarray

    @property
    def eta(self):
        return np.concatenate([self.xi, self.zeta])


def Cq_bold(qcfg, nom, nu, tau):
    """Row multiplying ``xi`` in the tau-order coupling term."""
    l = qcfg.l
    M1 = build_M(qcfg.Cq(1.0)[None, :], l, nu)
    scale = np.diag([tau ** (nu - 1 - k) for k in range(nu)])
    return nom.phi_bar @ scale @ M1 @ qcfg.T_inv(1.0) / nom.g_bar


def Cbar_bold(qcfg, nom, nu, ne, tau):
    """Row multiplying ``Xi*_xi`` in the tau-order coupling term."""
    l = qcfg.l
    Mbar = build_M(qcfg.Cbar(tau)[None, :] / tau, l, nu)
    sel = np.zeros((l, ne))
    for k in range(nu):
        sel[k + 1, k] = 1.0
    return nom.phi_bar @ Mbar @ qcfg.T_inv(tau) @ sel / nom.g_bar


def build_blocks(plant, nom, ctrl, qcfg, g, tau):
    nu, l = plant.nu, qcfg.l
    nz, nc = plant.nz, ctrl.n_c
    ne = nu + 2 * nz + nc
    a0, gb, D = qcfg.a0, nom.g_bar, ctrl.D
    A_l, _ = build_companion(l)
    T1 = qcfg.T(1.0)
    T1i = upper_unit_inverse(T1)
    C1 = qcfg.Cq(1.0)
    Cbar1 = qcfg.Cbar(1.0)
    CAT1 = C1 @ np.linalg.matrix_power(A_l, nu) @ T1i
    e_nu, e_l, e_1 = unit(nu, l), unit(l, l), unit(1, l)
    A11 = A_l - a0 * np.outer(T1 @ e_l, e_1) + (g / gb) * np.outer(e_nu, CAT1)
    A12 = -g * a0 * np.outer(e_nu, C1)
    A21 = -np.outer(e_l, CAT1) / gb
    A22 = A_l + a0 * np.outer(e_l, Cbar1)
    A_f = np.block([[A11, A12], [A21, A22]])
    Cb = Cq_bold(qcfg, nom, nu, tau)
    Cbb = Cbar_bold(qcfg, nom, nu, ne, tau)
    e_nu_s = unit(nu, ne)
    F1 = -(g / gb) * np.outer(e_nu_s, CAT1)
    F2 = g * a0 * np.outer(e_nu_s, C1)
    N_xi = g * D * e_nu
    N_zeta = -D * e_l
    N_e = (gb - g) * D * e_nu_s - noise_input_vector(plant, nom, ctrl)
    check_e = -g * unit(nu, 2 * l) + unit(2 * l, 2 * l)
    alpha = a0 * np.concatenate([T1 @ e_l, np.zeros(l)])
    return BlockMatrices(
        g=float(g), tau=float(tau), A11=A11, A12=A12, A21=A21, A22=A22, A_f=A_f,
        Cq_bold=Cb, Cbar_bold=Cbb, F1=F1, F2=F2, F=np.hstack([F1, F2]),
        N_xi=N_xi, N_zeta=N_zeta, N_e=N_e, N_eta=np.concatenate([N_xi, N_zeta]),
        check_e=check_e, alpha=alpha, Cq_check=np.concatenate([Cb, np.zeros(l)]),
        C1=C1, T1=T1, Cbar1=Cbar1, CAT1=CAT1,
        Delta=np.diag([tau ** (k + 1) for k in range(l)]),
    )


def check_fast_hurwitz(plant, nom, ctrl, qcfg, points=21):
    """Hurwitz check of ``A_f`` over the gain grid; returns the worst margin."""
    worst = -np.inf
    for g in plant.g_grid(points):
        A_f = build_blocks(plant, nom, ctrl, qcfg, g, qcfg.tau).A_f
        ok, margin = is_hurwitz(A_f)
        if not ok:
            raise NotHurwitzError(f"A_f is not Hurwitz at g={g:.6g} (margin {margin:.3g})")
        worst = max(worst, margin)
    return worst


class TransformAnalysis:
    """Coordinate change and fast/slow derivatives for one scenario and filter."""

    def __init__(self, scenario, qcfg, g=None):
        self.sc = scenario
        self.q = qcfg
        self.layout = make_layout(scenario, qcfg)
        p = scenario.plant
        self.g = p.g if g is None else g
        self.blocks = build_blocks(p, scenario.nominal, scenario.controller, qcfg, self.g, qcfg.tau)

    # quantities of the original state -----------------------------------
    def split(self, s):
        L = self.layout
        return s[L.x], s[L.z], s[L.theta], s[L.z_bar], s[L.q], s[L.p], s[L.chi_n]

    def u_r(self, theta, x, t, v):
        ctrl = self.sc.controller
        r, _ = self.sc.r(t)
        return (ctrl.L @ theta if ctrl.n_c else 0.0) + ctrl.D * (r - x[0] - v)

    def xi_star(self, chi, t):
        r, _ = self.sc.r(t)
        return self.sc.aug.A_s @ chi + self.sc.aug.B * r

    def zeta_star(self, u_r, bfd, v):
        nom, ctrl = self.sc.nominal, self.sc.controller
        return (u_r - bfd + nom.g_bar * ctrl.D * v / self.g) / self.q.a0

    def forward(self, s, t, v):
        """Map an original closed-loop state to ``(xi, zeta, e)``."""
        sc, L = self.sc, self.layout
        x, z, theta, z_bar, q, p, chi_n = self.split(s)
        chi = L.chi(s)
        ur = self.u_r(theta, x, t, v)
        d, _ = sc.d(t)
        bfd = lumped_disturbance(sc.plant, sc.nominal, x, z, z_bar, ur, d, t)
        return forward_transform(q, p, x, self.xi_star(chi, t), self.zeta_star(ur, bfd, v),
                                 chi - chi_n, sc.plant.nu, self.q.tau)

    def inverse(self, ts, chi_n, t, v):
        """Original state from ``(xi, zeta, e)`` and the nominal state."""
        sc, L, tau, nu, l = self.sc, self.layout, self.q.tau, self.sc.plant.nu, self.q.l
        s = np.zeros(L.size)
        chi = ts.e + chi_n
        s[L.chi_idx] = chi
        s[L.chi_n] = chi_n
        x, z, theta, z_bar = s[L.x], s[L.z], s[L.theta], s[L.z_bar]
        Xi = self.xi_star(chi, t)
        ur = self.u_r(theta, x, t, v)
        d, _ = sc.d(t)
        bfd = lumped_disturbance(sc.plant, sc.nominal, x, z, z_bar, ur, d, t)
        Xz = self.zeta_star(ur, bfd, v)
        Dinv = np.diag([tau ** -(k + 1) for k in range(l)])
        xpad = np.concatenate([x, np.zeros(l - nu)])
        s[L.q] = xpad + tau ** (nu + 1) * Dinv @ (ts.xi + unit(nu + 1, l) * Xi[nu - 1])
        s[L.p] = tau ** (l + 1) * Dinv @ (ts.zeta + unit(1, l) * Xz)
        return s

    def star_derivatives(self, s, t, v, s_bar=None):
        """Analytic ``(e_nu^T dXi*_xi/dt, dXi*_zeta/dt)`` along the real dynamics."""
        sc, L = self.sc, self.layout
        plant, nom, ctrl = sc.plant, sc.nominal, sc.controller
        nu = plant.nu
        x, z, theta, z_bar, q, p, _ = self.split(s)
        r, rd = sc.r(t)
        d, dd = sc.d(t)
        ur = self.u_r(theta, x, t, v)
        wmy = np.dot(self._c_w(), s)
        est = wmy if s_bar is None else float(np.clip(wmy, -s_bar, s_bar))
        u = ur - est
        xdot = np.append(x[1:], plant.phi @ x + plant.psi @ z + plant.f_d(x, z, t) + plant.g * (u + d))
        zdot = plant.S @ z + plant.G * x[0]
        zbdot = nom.S_bar @ z_bar + nom.G_bar * (x[0] + v)
        thdot = ctrl.J @ theta + ctrl.K * (r - x[0] - v)
        chidot = np.concatenate([xdot, zbdot, thdot, zdot])
        xi_dot_nu = sc.aug.A_s[nu - 1] @ chidot + sc.aug.B[nu - 1] * rd
        gx, gz, gt = plant.f_d.gradient(x, z, t)
        fdot = gx @ xdot + gz @ zdot + gt
        urdot_free = (ctrl.L @ thdot if ctrl.n_c else 0.0) + ctrl.D * (rd - xdot[0])
        g, gb = self.g, nom.g_bar
        bdot_rest = (plant.phi - nom.phi_bar) @ xdot + plant.psi @ zdot - nom.psi_bar @ zbdot + fdot + g * dd
        zeta_dot = ((gb / g) * urdot_free - bdot_rest / g) / self.q.a0
        return float(xi_dot_nu), float(zeta_dot)

    def _c_w(self):
        from .closedloop import build_closed_loop
        if not hasattr(self, "_cw_cache"):
            self._cw_cache = build_closed_loop(self.sc, self.q, s_bar=1.0).c_w
        return self._cw_cache

    def deriv(self, s, t, v):
        """Fast/slow derivatives evaluated at an original state (no clamp)."""
        ts = self.forward(s, t, v)
        chi = self.layout.chi(s)
        Xi = self.xi_star(chi, t)
        xdn, zd = self.star_derivatives(s, t, v)
        return transformed_deriv(ts, self.blocks, Xi, xdn, zd, v, self.sc.plant.nu)

    def dhat_identity_residual(self, s, t, v):
        """``|(w - y_p) - rhs|`` of the estimate identity, plus ``|w - y_p|``."""
        sc, b = self.sc, self.blocks
        ts = self.forward(s, t, v)
        x, z, theta, z_bar, *_ = self.split(s)
        ur = self.u_r(theta, x, t, v)
        d, _ = sc.d(t)
        bfd = lumped_disturbance(sc.plant, sc.nominal, x, z, z_bar, ur, d, t)
        Xi = self.xi_star(self.layout.chi(s), t)
        wmy = float(self._c_w() @ s)
        rhs = dhat_identity_rhs(ts, b, bfd, Xi, v, sc.nominal.g_bar, self.g, sc.controller.D, self.q.a0)
        return abs(wmy - rhs), abs(wmy)


def forward_transform(q, p, x, Xi_xi, Xi_zeta, e, nu, tau):
    l = q.size
    Delta = np.array([tau ** (k + 1) for k in range(l)])
    xpad = np.concatenate([x, np.zeros(l - nu)])
    xi = tau ** (-nu - 1) * Delta * (q - xpad) - unit(nu + 1, l) * Xi_xi[nu - 1]
    zeta = tau ** (-l - 1) * Delta * p - unit(1, l) * Xi_zeta
    return TransformedState(xi, zeta, np.asarray(e, dtype=float))


def transformed_deriv(ts, blocks, Xi_xi, xi_star_dot_nu, zeta_star_dot, v, nu):
    """Return ``(tau xi_dot, tau zeta_dot, e_dot)`` of the fast/slow form."""
    b = blocks
    tau, g = b.tau, b.g
    l = ts.xi.size
    cterm = float(b.Cq_bold @ ts.xi + b.Cbar_bold @ Xi_xi)
    e_nu, e_l = unit(nu, l), unit(l, l)
    txi = (b.A11 @ ts.xi + b.A12 @ ts.zeta - tau * g * e_nu * cterm
           - tau * unit(nu + 1, l) * xi_star_dot_nu + b.alpha[:l] * v / tau**nu + b.N_xi * v)
    tzeta = (b.A21 @ ts.xi + b.A22 @ ts.zeta + tau * e_l * cterm
             - tau * unit(1, l) * zeta_star_dot + b.N_zeta * v)
    ne = ts.e.size
    edot = (b.F1 @ ts.xi + b.F2 @ ts.zeta + tau * g * unit(nu, ne) * cterm + b.N_e * v)
    return txi, tzeta, edot  # e_dot still lacks A_s e, added by caller


def dhat_identity_rhs(ts, blocks, bfd, Xi_xi, v, g_bar, g, D, a0):
    b = blocks
    return float(bfd + b.CAT1 @ ts.xi / g_bar - a0 * b.C1 @ ts.zeta + (g - g_bar) / g * D * v
                 - b.tau * (b.Cq_bold @ ts.xi + b.Cbar_bold @ Xi_xi))


def kernel_params(scenario, qcfg, s_bar, g=None, saturate=True):
    """Flatten everything the transformed-system kernels need."""
    plant, nom, ctrl = scenario.plant, scenario.nominal, scenario.controller
    g = plant.g if g is None else g
    b = build_blocks(plant, nom, ctrl, qcfg, g, qcfg.tau)
    nc = ctrl.n_c
    f = lambda a: np.ascontiguousarray(a, dtype=float)
    ps = f([qcfg.tau, g, nom.g_bar, qcfg.a0, ctrl.D, s_bar, 1.0 if saturate else 0.0])
    pi = np.array([plant.nu, plant.nz, nc, qcfg.l, scenario.aug.n_e], dtype=np.int64)
    return (ps, pi, f(b.A_f), f(b.Cq_bold), f(b.Cbar_bold), f(b.F), f(scenario.aug.A_s), f(scenario.aug.B),
            f(b.alpha), f(b.N_eta), f(b.N_e), f(b.check_e), f(b.CAT1), f(b.C1),
            f(plant.phi), f(nom.phi_bar), f(plant.psi), f(nom.psi_bar), f(plant.S), f(plant.G),
            f(nom.S_bar), f(nom.G_bar), f(ctrl.J.reshape(nc, nc)), f(ctrl.K), f(ctrl.L),
            f(scenario.r.packed), f(scenario.d.packed), f(plant.f_d.packed))


def star_batch(scenario, a0, chi, t, v, dhat, g=None):
    """Vectorized ``Xi*_xi``, its row-nu derivative, ``dXi*_zeta/dt`` and the lumped disturbance.

    ``chi`` is ``(N, n_e)``; ``t``, ``v``, ``dhat`` are length ``N``.
    """
    plant, nom, ctrl, aug = scenario.plant, scenario.nominal, scenario.controller, scenario.aug
    g = plant.g if g is None else g
    nu = plant.nu
    sx, szb, sth, sz = aug.slices()
    x, zb, th, z = chi[:, sx], chi[:, szb], chi[:, sth], chi[:, sz]
    r, rd = scenario.r(t)
    d, dd = scenario.d(t)
    y = x[:, 0]
    ur = ctrl.D * (r - y - v) + (th @ ctrl.L if ctrl.n_c else 0.0)
    fval = plant.f_d(x, z, t)
    dphi = plant.phi - nom.phi_bar
    bfd = (x @ dphi + z @ plant.psi - zb @ nom.psi_bar + fval + g * d + (g - nom.g_bar) * ur) / g
    Xi = chi @ aug.A_s.T + np.outer(r, aug.B)
    xdot = np.empty_like(x)
    xdot[:, :-1] = x[:, 1:]
    xdot[:, -1] = x @ plant.phi + z @ plant.psi + fval + g * (ur - dhat + d)
    zdot = z @ plant.S.T + np.outer(y, plant.G)
    zbdot = zb @ nom.S_bar.T + np.outer(y + v, nom.G_bar)
    thdot = th @ ctrl.J.T + np.outer(r - y - v, ctrl.K) if ctrl.n_c else th
    chidot = np.concatenate([xdot, zbdot, thdot, zdot], axis=1)
    xi_dot_nu = chidot @ aug.A_s[nu - 1] + aug.B[nu - 1] * rd
    gx, gz, gt = plant.f_d.gradient(x, z, t)
    fdot = np.sum(gx * xdot, axis=1) + np.sum(gz * zdot, axis=1) + gt
    urdot = ctrl.D * (rd - xdot[:, 0]) + (thdot @ ctrl.L if ctrl.n_c else 0.0)
    rest = xdot @ dphi + zdot @ plant.psi - zbdot @ nom.psi_bar + fdot + g * dd
    zeta_dot = ((nom.g_bar / g) * urdot - rest / g) / a0
    return Xi, xi_dot_nu, zeta_dot, bfd
