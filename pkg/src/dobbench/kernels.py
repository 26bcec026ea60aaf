"""Hot integration loops.

Each function is compiled with numba unless ``DOBBENCH_DISABLE_NUMBA=1``,
in which case the identical source runs as ordinary numpy code.  Inputs
are plain float64/int64 arrays so both paths see the same data.
"""
import numpy as np

from ._jit import jit


@jit
def signal_eval(terms, t):
    val = 0.0
    der = 0.0
    for k in range(terms.shape[0]):
        kind = int(terms[k, 0])
        amp = terms[k, 1]
        freq = terms[k, 2]
        phase = terms[k, 3]
        if kind == 0:
            val += amp
        elif kind == 1:
            val += amp * np.sin(freq * t + phase)
            der += amp * freq * np.cos(freq * t + phase)
        elif kind == 2:
            val += amp * np.cos(freq * t + phase)
            der -= amp * freq * np.sin(freq * t + phase)
        else:
            p = int(freq)
            val += amp * t**p
            if p > 0:
                der += amp * p * t ** (p - 1)
    return val, der


@jit
def _source(x, z, t, idx):
    nu = x.shape[0]
    if idx < nu:
        return x[idx]
    if idx < nu + z.shape[0]:
        return z[idx - nu]
    return t


@jit
def fd_value(terms, x, z, t):
    out = 0.0
    for k in range(terms.shape[0]):
        kind = int(terms[k, 0])
        arg = _source(x, z, t, int(terms[k, 1]))
        coef = terms[k, 2]
        freq = terms[k, 3]
        phase = terms[k, 4]
        if kind == 0:
            out += coef * np.sin(freq * arg + phase)
        elif kind == 1:
            out += coef * np.cos(freq * arg + phase)
        elif kind == 2:
            out += coef * np.tanh(freq * arg + phase)
        else:
            out += coef * arg ** terms[k, 5]
    return out


@jit
def fd_gradient(terms, x, z, t):
    """Gradient over the source vector ``[x; z; t]``."""
    nu = x.shape[0]
    grad = np.zeros(nu + z.shape[0] + 1)
    for k in range(terms.shape[0]):
        kind = int(terms[k, 0])
        idx = int(terms[k, 1])
        arg = _source(x, z, t, idx)
        coef = terms[k, 2]
        freq = terms[k, 3]
        phase = terms[k, 4]
        if kind == 0:
            grad[idx] += coef * freq * np.cos(freq * arg + phase)
        elif kind == 1:
            grad[idx] -= coef * freq * np.sin(freq * arg + phase)
        elif kind == 2:
            grad[idx] += coef * freq / np.cosh(freq * arg + phase) ** 2
        else:
            pw = terms[k, 5]
            if pw != 0.0:
                grad[idx] += coef * pw * arg ** (pw - 1.0)
    return grad


@jit
def _clip(x, s_bar):
    if x > s_bar:
        return s_bar, True
    if x < -s_bar:
        return -s_bar, True
    return x, False


@jit
def _error_norm(s, chi_idx, chin_idx):
    acc = 0.0
    for k in range(chi_idx.shape[0]):
        d = s[chi_idx[k]] - s[chin_idx[k]]
        acc += d * d
    return np.sqrt(acc)


# --------------------------------------------------------------------------
# original closed loop
# --------------------------------------------------------------------------


@jit
def original_rhs(t, s, v, M, b_r, b_d, b_v, b_dh, b_fd, c_w, s_bar, rsig, dsig, fdt, nu, nz):
    wmy = np.dot(c_w, s)
    dh, active = _clip(wmy, s_bar)
    f = fd_value(fdt, s[0:nu], s[nu:nu + nz], t)
    r, _ = signal_eval(rsig, t)
    d, _ = signal_eval(dsig, t)
    ds = np.dot(M, s) + b_r * r + b_d * d + b_v * v + b_dh * dh + b_fd * f
    return ds, wmy, active


@jit
def rk4_original(s0, t0, h, nsteps, vseq, M, b_r, b_d, b_v, b_dh, b_fd, c_w, s_bar,
                 rsig, dsig, fdt, nu, nz, chi_idx, chin_idx, stride, tail_start, div_limit):
    """Fixed-step RK4 with the noise sample held over each step.

    Returns records every ``stride`` steps plus running metrics computed on
    every step: ``sup|e|``, tail sup (steps >= ``tail_start``), number of
    steps with active saturation, and the step index of divergence (-1 if
    none).
    """
    nrec = nsteps // stride + 1
    n = s0.shape[0]
    rec_t = np.zeros(nrec)
    rec_s = np.zeros((nrec, n))
    rec_w = np.zeros(nrec)
    rec_a = np.zeros(nrec, dtype=np.bool_)
    s = s0.copy()
    sup_e = 0.0
    tail_sup = 0.0
    sat_steps = 0
    diverged = -1
    filled = 0
    for k in range(nsteps + 1):
        t = t0 + k * h
        v = vseq[k] if k < nsteps else vseq[nsteps - 1]
        k1, wmy, active = original_rhs(t, s, v, M, b_r, b_d, b_v, b_dh, b_fd, c_w, s_bar, rsig, dsig, fdt, nu, nz)
        en = _error_norm(s, chi_idx, chin_idx)
        if en > sup_e:
            sup_e = en
        if k >= tail_start and en > tail_sup:
            tail_sup = en
        if k % stride == 0:
            j = k // stride
            rec_t[j] = t
            rec_s[j] = s
            rec_w[j] = wmy
            rec_a[j] = active
            filled = j + 1
        if k == nsteps:
            break
        if active:
            sat_steps += 1
        k2, _, _ = original_rhs(t + 0.5 * h, s + 0.5 * h * k1, v, M, b_r, b_d, b_v, b_dh, b_fd, c_w, s_bar, rsig, dsig, fdt, nu, nz)
        k3, _, _ = original_rhs(t + 0.5 * h, s + 0.5 * h * k2, v, M, b_r, b_d, b_v, b_dh, b_fd, c_w, s_bar, rsig, dsig, fdt, nu, nz)
        k4, _, _ = original_rhs(t + h, s + h * k3, v, M, b_r, b_d, b_v, b_dh, b_fd, c_w, s_bar, rsig, dsig, fdt, nu, nz)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(s)) or np.max(np.abs(s)) > div_limit:
            diverged = k + 1
            j = filled
            if j < nrec:
                rec_t[j] = t + h
                rec_s[j] = s
                filled = j + 1
            break
    return rec_t[:filled], rec_s[:filled], rec_w[:filled], rec_a[:filled], sup_e, tail_sup, sat_steps, diverged


# --------------------------------------------------------------------------
# transformed (fast/slow) system
# --------------------------------------------------------------------------
# scalars ps = [tau, g, g_bar, a0, D, s_bar, saturate]
# ints    pi = [nu, nz, nc, l, ne]


@jit
def transformed_rhs(t, Y, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne, echk,
                    CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt):
    """Derivative of ``Y = [xi; zeta; e; chi_n]``.

    Returns ``(Y_dot, w - y_p, active)``; with saturation inactive this is
    the fast/slow form, otherwise the clamp correction is added exactly.
    """
    dphi = phi - phib
    tau, g, gb, a0, D, s_bar, sat_on = ps[0], ps[1], ps[2], ps[3], ps[4], ps[5], ps[6]
    nu, nz, nc, l, ne = pi[0], pi[1], pi[2], pi[3], pi[4]
    eta = Y[0:2 * l]
    xi = Y[0:l]
    zeta = Y[l:2 * l]
    e = Y[2 * l:2 * l + ne]
    chin = Y[2 * l + ne:2 * l + 2 * ne]
    chi = e + chin
    x = chi[0:nu]
    zb = chi[nu:nu + nz]
    th = chi[nu + nz:nu + nz + nc]
    z = chi[nu + nz + nc:ne]
    r, rd = signal_eval(rsig, t)
    d, dd = signal_eval(dsig, t)
    y = x[0]
    ur = D * (r - y - v)
    if nc > 0:
        ur += np.dot(Lc, th)
    fval = fd_value(fdt, x, z, t)
    bd = (np.dot(dphi, x) + np.dot(psi, z) - np.dot(psib, zb) + fval + g * d + (g - gb) * ur) / g
    Xi = np.dot(As, chi) + Bv * r
    cterm = np.dot(Cb, xi) + np.dot(Cbb, Xi)
    wmy = bd + np.dot(CAT1, xi) / gb - a0 * np.dot(C1, zeta) + (g - gb) / g * D * v - tau * cterm
    if sat_on > 0.5:
        dh, active = _clip(wmy, s_bar)
    else:
        dh, active = wmy, False
    delta = dh - wmy
    u = ur - dh
    # real-state derivatives feed the analytic derivative of Xi*
    xdot = np.empty(nu)
    for i in range(nu - 1):
        xdot[i] = x[i + 1]
    xdot[nu - 1] = np.dot(phi, x) + np.dot(psi, z) + fval + g * (u + d)
    zdot = np.dot(S, z) + G * y
    zbdot = np.dot(Sb, zb) + Gb * (y + v)
    thdot = np.zeros(nc)
    if nc > 0:
        thdot = np.dot(J, th) + K * (r - y - v)
    chidot = np.concatenate((xdot, zbdot, thdot, zdot))
    xi_dot_nu = np.dot(As[nu - 1], chidot) + Bv[nu - 1] * rd
    grad = fd_gradient(fdt, x, z, t)
    fdot = np.dot(grad[0:nu], xdot) + np.dot(grad[nu:nu + nz], zdot) + grad[nu + nz]
    urdot_free = D * (rd - xdot[0])
    if nc > 0:
        urdot_free += np.dot(Lc, thdot)
    zeta_dot_star = (gb / g) * urdot_free / a0 - (
        np.dot(dphi, xdot) + np.dot(psi, zdot) - np.dot(psib, zbdot) + fdot + g * dd) / (g * a0)
    rhs_eta = np.dot(Af, eta) + tau * echk * cterm + alpha * (v / tau**nu) + Neta * v
    rhs_eta[nu] -= tau * xi_dot_nu
    rhs_eta[l] -= tau * zeta_dot_star
    # clamp correction (zero while the saturation is inactive)
    rhs_eta[nu - 1] += g * delta
    rhs_eta[2 * l - 1] -= delta
    edot = np.dot(As, e) + np.dot(F, eta) + Ne * v
    edot[nu - 1] += tau * g * cterm - g * delta
    chindot = np.dot(As, chin) + Bv * r
    out = np.concatenate((rhs_eta / tau, edot, chindot))
    return out, wmy, active


@jit
def rk4_transformed(Y0, t0, h, nsteps, vseq, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne, echk,
                    CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt,
                    stride, tail_start, div_limit):
    l = pi[3]
    ne = pi[4]
    nrec = nsteps // stride + 1
    n = Y0.shape[0]
    rec_t = np.zeros(nrec)
    rec_y = np.zeros((nrec, n))
    rec_w = np.zeros(nrec)
    rec_a = np.zeros(nrec, dtype=np.bool_)
    Y = Y0.copy()
    sup_e = 0.0
    tail_sup = 0.0
    sat_steps = 0
    diverged = -1
    filled = 0
    for k in range(nsteps + 1):
        t = t0 + k * h
        v = vseq[k] if k < nsteps else vseq[nsteps - 1]
        k1, wmy, active = transformed_rhs(t, Y, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne, echk,
                                          CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt)
        en = np.sqrt(np.sum(Y[2 * l:2 * l + ne] ** 2))
        if en > sup_e:
            sup_e = en
        if k >= tail_start and en > tail_sup:
            tail_sup = en
        if k % stride == 0:
            j = k // stride
            rec_t[j] = t
            rec_y[j] = Y
            rec_w[j] = wmy
            rec_a[j] = active
            filled = j + 1
        if k == nsteps:
            break
        if active:
            sat_steps += 1
        k2, _, _ = transformed_rhs(t + 0.5 * h, Y + 0.5 * h * k1, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne,
                                   echk, CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt)
        k3, _, _ = transformed_rhs(t + 0.5 * h, Y + 0.5 * h * k2, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne,
                                   echk, CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt)
        k4, _, _ = transformed_rhs(t + h, Y + h * k3, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne,
                                   echk, CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(Y)) or np.max(np.abs(Y)) > div_limit:
            diverged = k + 1
            break
    return rec_t[:filled], rec_y[:filled], rec_w[:filled], rec_a[:filled], sup_e, tail_sup, sat_steps, diverged


@jit
def etdrk4_transformed(Y0, t0, h, nsteps, vseq, Lin, E, E2, Q, f1, f2, f3,
                       ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne, echk,
                       CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt,
                       stride, tail_start, div_limit):
    """Exponential RK4 (Cox-Matthews) with the stiff linear part ``Lin``.

    ``E = exp(h Lin)``, ``E2 = exp(h Lin / 2)``, ``Q = (h/2) phi1(h Lin/2)``
    and ``f1, f2, f3`` are the usual ETDRK4 weight matrices already scaled
    by ``h``.  The remainder ``rhs - Lin Y`` is treated explicitly.
    """
    l = pi[3]
    ne = pi[4]
    nrec = nsteps // stride + 1
    n = Y0.shape[0]
    rec_t = np.zeros(nrec)
    rec_y = np.zeros((nrec, n))
    rec_w = np.zeros(nrec)
    rec_a = np.zeros(nrec, dtype=np.bool_)
    Y = Y0.copy()
    sup_e = 0.0
    tail_sup = 0.0
    sat_steps = 0
    diverged = -1
    filled = 0
    for k in range(nsteps + 1):
        t = t0 + k * h
        v = vseq[k] if k < nsteps else vseq[nsteps - 1]
        fu, wmy, active = transformed_rhs(t, Y, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne, echk,
                                          CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt)
        en = np.sqrt(np.sum(Y[2 * l:2 * l + ne] ** 2))
        if en > sup_e:
            sup_e = en
        if k >= tail_start and en > tail_sup:
            tail_sup = en
        if k % stride == 0:
            j = k // stride
            rec_t[j] = t
            rec_y[j] = Y
            rec_w[j] = wmy
            rec_a[j] = active
            filled = j + 1
        if k == nsteps:
            break
        if active:
            sat_steps += 1
        Nu = fu - np.dot(Lin, Y)
        a = np.dot(E2, Y) + np.dot(Q, Nu)
        fa, _, _ = transformed_rhs(t + 0.5 * h, a, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne, echk,
                                   CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt)
        Na = fa - np.dot(Lin, a)
        b = np.dot(E2, Y) + np.dot(Q, Na)
        fb, _, _ = transformed_rhs(t + 0.5 * h, b, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne, echk,
                                   CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt)
        Nb = fb - np.dot(Lin, b)
        c = np.dot(E2, a) + np.dot(Q, 2.0 * Nb - Nu)
        fc, _, _ = transformed_rhs(t + h, c, v, ps, pi, Af, Cb, Cbb, F, As, Bv, alpha, Neta, Ne, echk,
                                   CAT1, C1, phi, phib, psi, psib, S, G, Sb, Gb, J, K, Lc, rsig, dsig, fdt)
        Nc = fc - np.dot(Lin, c)
        Y = np.dot(E, Y) + np.dot(f1, Nu) + 2.0 * np.dot(f2, Na + Nb) + np.dot(f3, Nc)
        if not np.all(np.isfinite(Y)) or np.max(np.abs(Y)) > div_limit:
            diverged = k + 1
            break
    return rec_t[:filled], rec_y[:filled], rec_w[:filled], rec_a[:filled], sup_e, tail_sup, sat_steps, diverged
