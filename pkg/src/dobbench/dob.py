"""Q-filter disturbance observer: state-space blocks and output maps."""
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError
from .linalg import build_companion, build_Cq, build_M, build_T, unit, upper_unit_inverse


@dataclass(frozen=True)
class QFilterConfig:
    l: int
    m: int
    a: tuple
    c: tuple = ()
    tau: float = 0.05
    s_bar: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if not self.l >= self.m >= 1:
            raise ConfigError(f"need l >= m >= 1, got l={self.l}, m={self.m}")
        if len(self.a) != self.l:
            raise ConfigError(f"qfilter.a must have {self.l} entries")
        if len(self.c) != self.l - self.m:
            raise ConfigError(f"qfilter.c must have {self.l - self.m} entries")
        if min(self.a) <= 0:
            raise ConfigError("qfilter.a must be strictly positive")
        if self.c and min(self.c) < 0:
            raise ConfigError("qfilter.c must be nonnegative")
        if not self.tau > 0:
            raise ConfigError(f"qfilter.tau must be positive, got {self.tau}")
        if self.s_bar is not None and not self.s_bar > 0:
            raise ConfigError("qfilter.s_bar must be positive")

    def check_degree(self, nu):
        # m = nu feeds noise straight into w
        if not self.m > nu:
            raise ConfigError(f"Q-filter needs m > nu (m={self.m}, nu={nu})")

    def with_tau(self, tau):
        return replace(self, tau=float(tau))

    def with_saturation(self, s_bar):
        return replace(self, s_bar=float(s_bar))

    @property
    def a0(self):
        return self.a[0]

    def T(self, tau=None):
        return build_T(self.a, self.tau if tau is None else tau, self.l)

    def T_inv(self, tau=None):
        return upper_unit_inverse(self.T(tau))

    def Cq(self, tau=None):
        return build_Cq(self.a0, self.c, self.tau if tau is None else tau, self.l, self.m)[0]

    def Cbar(self, tau=None):
        tau = self.tau if tau is None else tau
        return self.Cq(tau) - self.T(tau)[0]


class DobState(NamedTuple):
    z_bar: np.ndarray
    q: np.ndarray
    p: np.ndarray


class DobMaps(NamedTuple):
    """Precomputed linear maps of the observer at one ``tau``."""

    kq: np.ndarray      # q injection gain (a0/tau^l) T_tau e_l
    kp: np.ndarray      # p feedback row (a0/tau^l) e_1^T T_tau
    w_q: np.ndarray     # w = w_zbar . z_bar + w_q . q
    w_zbar: np.ndarray
    yp_p: np.ndarray    # y_p = yp_p . p


def dob_maps(cfg, nom, nu):
    l, tau, a0 = cfg.l, cfg.tau, cfg.a0
    A_l, _ = build_companion(l)
    T = cfg.T()
    Ti = upper_unit_inverse(T)
    C = cfg.Cq()
    scale = a0 / tau**l
    kq = scale * T @ unit(l, l)
    kp = scale * T[0]
    M = build_M(C, l, nu)
    CAnu = C @ np.linalg.matrix_power(A_l, nu)
    w_q = (CAnu @ Ti - nom.phi_bar @ M @ Ti) / nom.g_bar
    w_zbar = -nom.psi_bar / nom.g_bar
    return DobMaps(kq, kp, w_q, w_zbar, scale * C)


def initial_state(nz, l):
    return DobState(np.zeros(nz), np.zeros(l), np.zeros(l))


def dob_deriv(cfg, nom, state, y_meas, u):
    """Derivatives ``(z_bar_dot, q_dot, p_dot)`` of the observer states."""
    l = cfg.l
    A_l, _ = build_companion(l)
    T = cfg.T()
    scale = cfg.a0 / cfg.tau**l
    z_bar, q, p = (np.asarray(s, dtype=float) for s in state)
    zb_dot = nom.S_bar @ z_bar + nom.G_bar * y_meas
    q_dot = A_l @ q - scale * (T @ unit(l, l)) * (q[0] - y_meas)
    p_dot = A_l @ p + unit(l, l) * (-scale * T[0] @ p + u)
    return zb_dot, q_dot, p_dot


def compute_w(cfg, nom, nu, z_bar, q):
    A_l, _ = build_companion(cfg.l)
    Ti = cfg.T_inv()
    C = cfg.Cq()
    M = build_M(C, cfg.l, nu)
    q = np.asarray(q, dtype=float)
    inner = nom.psi_bar @ np.asarray(z_bar, dtype=float) + nom.phi_bar @ (M @ (Ti @ q))
    return float((-inner + C @ np.linalg.matrix_power(A_l, nu) @ Ti @ q) / nom.g_bar)


def compute_yp(cfg, p):
    return float(cfg.a0 / cfg.tau**cfg.l * cfg.Cq() @ np.asarray(p, dtype=float))


def saturate(x, s_bar):
    return float(np.clip(x, -s_bar, s_bar))


def dhat(w, y_p, s_bar):
    """Saturated disturbance estimate and whether the clamp is active."""
    raw = w - y_p
    return saturate(raw, s_bar), bool(abs(raw) > s_bar)
