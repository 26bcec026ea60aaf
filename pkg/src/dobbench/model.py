"""Plant, nominal model, outer controller and the augmented nominal loop."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .linalg import require_hurwitz

# signal term kinds (packed column 0)
SIG_CONSTANT, SIG_SIN, SIG_COS, SIG_MONOMIAL = 0, 1, 2, 3
# state-function term kinds
FD_SIN, FD_COS, FD_TANH, FD_POWER = 0, 1, 2, 3

_SIG_KINDS = {"constant": SIG_CONSTANT, "sin": SIG_SIN, "cos": SIG_COS}
_FD_KINDS = {"sin": FD_SIN, "cos": FD_COS, "tanh": FD_TANH, "power": FD_POWER}


class Signal:
    """Scalar time signal built from constant, sinusoid and polynomial terms.

    Terms are dicts such as ``{"kind": "sin", "amp": 0.5, "freq": 2.0}``
    (angular frequency), ``{"kind": "constant", "value": 1.0}`` or
    ``{"kind": "polynomial", "coeffs": [c0, c1, ...]}``.  The packed form
    has one row ``(kind, amp, freq, phase)`` per term; polynomials are
    expanded into monomials with the power stored in the ``freq`` slot.
    """

    def __init__(self, terms=()):
        self.terms = [dict(t) for t in terms]
        rows = []
        for t in self.terms:
            kind = t.get("kind")
            if kind == "constant":
                rows.append((SIG_CONSTANT, float(t["value"]), 0.0, 0.0))
            elif kind in ("sin", "cos"):
                rows.append((_SIG_KINDS[kind], float(t["amp"]), float(t["freq"]), float(t.get("phase", 0.0))))
            elif kind == "polynomial":
                for power, coef in enumerate(t["coeffs"]):
                    rows.append((SIG_MONOMIAL, float(coef), float(power), 0.0))
            else:
                raise ConfigError(f"unknown signal kind {kind!r}")
        self.packed = np.array(rows, dtype=float).reshape(-1, 4)

    @classmethod
    def constant(cls, value):
        return cls([{"kind": "constant", "value": value}])

    def __call__(self, t):
        """Return ``(value, derivative)``; ``t`` may be an array."""
        t = np.asarray(t, dtype=float)
        val = np.zeros_like(t)
        der = np.zeros_like(t)
        for kind, amp, freq, phase in self.packed:
            if kind == SIG_CONSTANT:
                val = val + amp
            elif kind == SIG_SIN:
                val = val + amp * np.sin(freq * t + phase)
                der = der + amp * freq * np.cos(freq * t + phase)
            elif kind == SIG_COS:
                val = val + amp * np.cos(freq * t + phase)
                der = der - amp * freq * np.sin(freq * t + phase)
            else:
                p = int(freq)
                val = val + amp * t**p
                if p > 0:
                    der = der + amp * p * t ** (p - 1)
        return val, der

    def sup_bound(self, horizon):
        """Crude bound of ``(sup|s|, sup|s'|)`` on ``[0, horizon]``."""
        tt = np.linspace(0.0, horizon, 20001)
        val, der = self(tt)
        return float(np.max(np.abs(val))), float(np.max(np.abs(der)))


class StateFunction:
    """State dependent disturbance ``f_d(x, z, t)`` with analytic gradient.

    Each term is ``coef * fn(freq * s + phase)`` for ``fn`` in sin/cos/tanh,
    or ``coef * s**power``, where ``s`` is one of ``x1..x_nu``, ``z1..`` or
    ``t``.
    """

    def __init__(self, terms=(), nu=1, nz=0):
        self.terms = [dict(t) for t in terms]
        self.nu, self.nz = nu, nz
        rows = []
        for t in self.terms:
            kind = t.get("kind")
            if kind not in _FD_KINDS:
                raise ConfigError(f"unknown f_d term kind {kind!r}")
            rows.append((
                _FD_KINDS[kind],
                self._source_index(t.get("source", "x1")),
                float(t.get("coef", 1.0)),
                float(t.get("freq", 1.0)),
                float(t.get("phase", 0.0)),
                float(t.get("power", 1.0)),
            ))
        self.packed = np.array(rows, dtype=float).reshape(-1, 6)

    def _source_index(self, src):
        if src == "t":
            return self.nu + self.nz
        if len(src) >= 2 and src[0] in "xz" and src[1:].isdigit():
            k = int(src[1:])
            limit = self.nu if src[0] == "x" else self.nz
            if 1 <= k <= limit:
                return k - 1 if src[0] == "x" else self.nu + k - 1
        raise ConfigError(f"invalid f_d source {src!r}")

    def _sources(self, x, z, t):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return np.concatenate([x, z, t[..., None]], axis=-1)

    def __call__(self, x, z, t=0.0):
        s = self._sources(x, z, t)
        out = np.zeros(s.shape[:-1])
        for kind, idx, coef, freq, phase, power in self.packed:
            arg = s[..., int(idx)]
            if kind == FD_POWER:
                out = out + coef * arg**power
            else:
                fn = (np.sin, np.cos, np.tanh)[int(kind)]
                out = out + coef * fn(freq * arg + phase)
        return out

    def gradient(self, x, z, t=0.0):
        """Return ``(df/dx, df/dz, df/dt)``."""
        s = self._sources(x, z, t)
        grad = np.zeros_like(s)
        for kind, idx, coef, freq, phase, power in self.packed:
            i = int(idx)
            arg = s[..., i]
            if kind == FD_SIN:
                grad[..., i] += coef * freq * np.cos(freq * arg + phase)
            elif kind == FD_COS:
                grad[..., i] -= coef * freq * np.sin(freq * arg + phase)
            elif kind == FD_TANH:
                grad[..., i] += coef * freq / np.cosh(freq * arg + phase) ** 2
            elif power != 0:
                grad[..., i] += coef * power * arg ** (power - 1)
        return grad[..., : self.nu], grad[..., self.nu: self.nu + self.nz], grad[..., -1]


def _vec(name, value, size=None):
    arr = np.atleast_1d(np.asarray(value, dtype=float)).ravel()
    if size is not None and arr.size != size:
        raise ConfigError(f"{name} must have length {size}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} has non-finite entries")
    return arr


def _mat(name, value, rows, cols):
    arr = np.asarray(value, dtype=float).reshape(rows, cols) if np.size(value) == rows * cols else None
    if arr is None:
        raise ConfigError(f"{name} must be {rows}x{cols}")
    return arr


@dataclass
class PlantModel:
    nu: int
    phi: np.ndarray
    psi: np.ndarray
    S: np.ndarray
    G: np.ndarray
    g: float
    g_lo: float
    g_hi: float
    f_d: Optional[StateFunction] = None

    def __post_init__(self):
        if self.nu < 1:
            raise ConfigError("relative degree nu must be >= 1")
        self.phi = _vec("plant.phi", self.phi, self.nu)
        self.psi = _vec("plant.psi", self.psi)
        nz = self.psi.size
        if nz < 1:
            raise ConfigError("plant needs internal dynamics (n > nu)")
        self.S = _mat("plant.S", self.S, nz, nz)
        self.G = _vec("plant.G", self.G, nz)
        if self.g_lo == 0 or self.g_hi == 0 or np.sign(self.g_lo) != np.sign(self.g_hi):
            raise ConfigError("gain bounds must be nonzero with equal sign")
        if self.g_lo > self.g_hi:
            raise ConfigError("g_lo must not exceed g_hi")
        if not self.g_lo <= self.g <= self.g_hi:
            raise ConfigError(f"g={self.g} outside [{self.g_lo}, {self.g_hi}]")
        if self.f_d is None:
            self.f_d = StateFunction((), self.nu, nz)
        require_hurwitz(self.S, "plant.S")

    @property
    def nz(self):
        return self.psi.size

    @property
    def n(self):
        return self.nu + self.nz

    @property
    def g_check(self):
        return max(abs(self.g_lo), abs(self.g_hi))

    def g_grid(self, points=21):
        return np.linspace(self.g_lo, self.g_hi, points)


@dataclass
class NominalModel:
    phi_bar: np.ndarray
    psi_bar: np.ndarray
    g_bar: float
    S_bar: np.ndarray
    G_bar: np.ndarray

    def __post_init__(self):
        self.phi_bar = _vec("nominal.phi_bar", self.phi_bar)
        self.psi_bar = _vec("nominal.psi_bar", self.psi_bar)
        nz = self.psi_bar.size
        self.S_bar = _mat("nominal.S_bar", self.S_bar, nz, nz)
        self.G_bar = _vec("nominal.G_bar", self.G_bar, nz)
        if self.g_bar == 0:
            raise ConfigError("nominal.g_bar must be nonzero")
        require_hurwitz(self.S_bar, "nominal.S_bar")

    def check_against(self, plant):
        if self.phi_bar.size != plant.nu or self.psi_bar.size != plant.nz:
            raise ConfigError("nominal model dimensions do not match the plant")


@dataclass
class OuterController:
    J: np.ndarray
    K: np.ndarray
    L: np.ndarray
    D: float

    def __post_init__(self):
        self.K = np.atleast_1d(np.asarray(self.K, dtype=float)).ravel()
        nc = self.K.size
        self.L = _vec("controller.L", self.L, nc)
        self.J = _mat("controller.J", self.J, nc, nc) if nc else np.zeros((0, 0))
        self.D = float(self.D)

    @property
    def n_c(self):
        return self.K.size


@dataclass
class AugmentedNominal:
    A_s: np.ndarray
    B: np.ndarray
    nu: int
    nz: int
    n_c: int
    margin: float = 0.0

    @property
    def n_e(self):
        return self.A_s.shape[0]

    def slices(self):
        """Slices of ``chi = [x; z_bar; theta; z]``."""
        a = self.nu
        b = a + self.nz
        c = b + self.n_c
        return slice(0, a), slice(a, b), slice(b, c), slice(c, c + self.nz)


@dataclass
class Scenario:
    plant: PlantModel
    nominal: NominalModel
    controller: OuterController
    r: Signal = field(default_factory=lambda: Signal.constant(0.0))
    d: Signal = field(default_factory=lambda: Signal.constant(0.0))
    x0: Optional[np.ndarray] = None
    z0: Optional[np.ndarray] = None
    theta0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.nominal.check_against(self.plant)
        p = self.plant
        self.x0 = np.zeros(p.nu) if self.x0 is None else _vec("initial.x", self.x0, p.nu)
        self.z0 = np.zeros(p.nz) if self.z0 is None else _vec("initial.z", self.z0, p.nz)
        nc = self.controller.n_c
        self.theta0 = np.zeros(nc) if self.theta0 is None else _vec("initial.theta", self.theta0, nc)
        self.aug = assemble_As_B(p, self.nominal, self.controller)


def plant_deriv(plant, x, z, u, d=0.0, t=0.0):
    """Right-hand side of the uncertain plant; returns ``(xdot, zdot, y)``."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z)) and np.isfinite(u)):
        raise ConfigError("non-finite plant state or input")
    xdot = np.empty_like(x)
    xdot[:-1] = x[1:]
    xdot[-1] = plant.phi @ x + plant.psi @ z + plant.f_d(x, z, t) + plant.g * (u + d)
    zdot = plant.S @ z + plant.G * x[0]
    return xdot, zdot, x[0]


def controller_eval(ctrl, theta, y_meas, r):
    """Outer controller driven by the measured output; ``(theta_dot, u_r)``."""
    theta = np.asarray(theta, dtype=float)
    if theta.size != ctrl.n_c:
        raise ConfigError(f"controller state must have length {ctrl.n_c}")
    err = r - y_meas
    theta_dot = ctrl.J @ theta + ctrl.K * err
    u_r = (ctrl.L @ theta if ctrl.n_c else 0.0) + ctrl.D * err
    return theta_dot, float(u_r)


def assemble_As_B(plant, nom, ctrl):
    """Matrices of the nominal loop augmented with the virtual ``z_n``."""
    nu, nz, nc = plant.nu, plant.nz, ctrl.n_c
    ne = nu + nz + nc + nz
    A = np.zeros((ne, ne))
    B = np.zeros(ne)
    ix = slice(0, nu)
    izb = slice(nu, nu + nz)
    ith = slice(nu + nz, nu + nz + nc)
    iz = slice(nu + nz + nc, ne)
    gb, D = nom.g_bar, ctrl.D
    A[ix, ix] = np.eye(nu, k=1)
    A[nu - 1, ix] += nom.phi_bar
    A[nu - 1, 0] -= gb * D
    A[nu - 1, izb] = nom.psi_bar
    A[nu - 1, ith] = gb * ctrl.L
    B[nu - 1] = gb * D
    A[izb, izb] = nom.S_bar
    A[izb, 0] = nom.G_bar
    A[ith, ith] = ctrl.J
    A[ith, 0] = -ctrl.K
    B[ith] = ctrl.K
    A[iz, iz] = plant.S
    A[iz, 0] = plant.G
    margin = require_hurwitz(A, "nominal closed loop A_s (outer controller not well designed)")
    return AugmentedNominal(A, B, nu, nz, nc, margin)


def lumped_disturbance(plant, nom, x, z, z_bar, u_r, d=0.0, t=0.0):
    """Lumped disturbance seen by the DOB (analysis-side quantity).

    Vectorized over leading axes of the state arguments.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    z_bar = np.asarray(z_bar, dtype=float)
    g = plant.g
    mismatch = x @ (plant.phi - nom.phi_bar) + z @ plant.psi - z_bar @ nom.psi_bar
    return (mismatch + plant.f_d(x, z, t) + g * d + (g - nom.g_bar) * u_r) / g


def noise_input_vector(plant, nom, ctrl):
    """``N = [g_bar D B_nu; -G_bar; K; 0]`` of the error dynamics."""
    nu, nz = plant.nu, plant.nz
    N = np.zeros(nu + 2 * nz + ctrl.n_c)
    N[nu - 1] = nom.g_bar * ctrl.D
    N[nu:nu + nz] = -nom.G_bar
    N[nu + nz:nu + nz + ctrl.n_c] = ctrl.K
    return N
