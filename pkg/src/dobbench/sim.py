"""Closed-loop simulation, noise models, performance metrics and tau sweeps."""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import expm

from . import kernels
from .closedloop import build_closed_loop, initial_state, make_layout
from .errors import ConfigError
from .transform import TransformAnalysis, build_blocks, kernel_params

NOISE_KINDS = ("none", "uniform", "sinusoid", "square")
DIVERGENCE_LIMIT = 1e9


@dataclass(frozen=True)
class SimConfig:
    step: float = 1e-4
    horizon: float = 30.0
    seed: int = 0
    noise: str = "square"
    mu: float = 0.0
    freq: float = 10.0        # sinusoid frequency in Hz
    period: float = 0.01      # square-wave period in seconds
    tail_fraction: float = 0.2
    record_every: Optional[int] = None

    def __post_init__(self):
        if not self.step > 0 or not self.horizon > 0:
            raise ConfigError("step and horizon must be positive")
        if self.step > self.horizon / 100:
            raise ConfigError(f"step {self.step} exceeds horizon/100")
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.noise!r}")
        if self.mu < 0:
            raise ConfigError("noise bound mu must be nonnegative")
        if not 0 < self.tail_fraction < 1:
            raise ConfigError("tail_fraction must lie in (0, 1)")

    @classmethod
    def from_dict(cls, doc):
        noise = doc.get("noise", {})
        kw = dict(noise=noise.get("kind", "square"), mu=noise.get("mu", 0.0))
        for key in ("freq", "period"):
            if key in noise:
                kw[key] = noise[key]
        for key in ("step", "horizon", "seed"):
            if key in doc:
                kw[key] = doc[key]
        if "record_every" in doc:
            kw["record_every"] = doc["record_every"]
        return cls(**kw)

    def with_noise(self, mu, kind=None):
        return replace(self, mu=float(mu), noise=self.noise if kind is None else kind)

    @property
    def nsteps(self):
        return int(round(self.horizon / self.step))


def noise_sequence(cfg, nsteps, step, t0=0.0):
    """One noise sample per integration step, each bounded by ``mu``."""
    mu = cfg.mu
    if cfg.noise == "none" or mu == 0.0:
        return np.zeros(nsteps)
    t = t0 + step * np.arange(nsteps)
    if cfg.noise == "uniform":
        return np.random.default_rng(cfg.seed).uniform(-mu, mu, nsteps)
    if cfg.noise == "sinusoid":
        phase = np.random.default_rng(cfg.seed).uniform(0.0, 2 * np.pi)
        return mu * np.sin(2 * np.pi * cfg.freq * t + phase)
    # the small offset keeps switch instants that fall on the step grid on the grid
    half = np.floor(t / (0.5 * cfg.period) + 1e-9).astype(np.int64)
    return np.where(half % 2 == 0, mu, -mu)


class Trajectory(NamedTuple):
    times: np.ndarray
    chi: np.ndarray
    chi_n: np.ndarray
    e_norm: np.ndarray
    dhat: np.ndarray
    w_minus_yp: np.ndarray
    sat_active: np.ndarray
    states: np.ndarray      # full recorded state (original or transformed coordinates)
    sup_e: float            # metrics over every integration step
    tail_sup_e: float
    sat_steps: int
    nsteps: int
    diverged: bool
    method: str
    tau: float
    step: float


@dataclass
class PerformanceReport:
    tau: float
    sup_e: float
    tail_sup_e: float
    saturation_fraction: float
    diverged: bool
    pass_transient: Optional[bool] = None
    pass_steady: Optional[bool] = None

    def to_dict(self):
        return asdict(self)


def _stride(cfg, nsteps):
    if cfg.record_every is not None:
        return cfg.record_every
    return max(1, nsteps // 20000)


def _tail_start(cfg, nsteps):
    return int(math.ceil((1.0 - cfg.tail_fraction) * nsteps))


def resolve_s_bar(scenario, qcfg, s_bar=None):
    if s_bar is not None:
        return float(s_bar)
    if qcfg.s_bar is not None:
        return float(qcfg.s_bar)
    from .bounds import default_s_bar
    return default_s_bar(scenario, qcfg)


def integrate(scenario, qcfg, cfg, s_bar=None, method="rk4", step=None):
    """Simulate the closed loop over ``[0, horizon]``.

    ``method`` is ``"rk4"`` (original coordinates), ``"rk4-transformed"`` or
    ``"etd"`` (exponential integrator on the fast/slow coordinates, meant for
    very small ``tau``).
    """
    s_bar = resolve_s_bar(scenario, qcfg, s_bar)
    h = cfg.step if step is None else float(step)
    nsteps = int(round(cfg.horizon / h))
    vseq = noise_sequence(cfg, nsteps, h)
    stride = _stride(cfg, nsteps)
    tail = _tail_start(cfg, nsteps)
    if method == "rk4":
        return _integrate_original(scenario, qcfg, s_bar, h, nsteps, vseq, stride, tail)
    if method in ("rk4-transformed", "etd"):
        return _integrate_transformed(scenario, qcfg, s_bar, h, nsteps, vseq, stride, tail, method)
    raise ConfigError(f"unknown integration method {method!r}")


def _integrate_original(scenario, qcfg, s_bar, h, nsteps, vseq, stride, tail):
    cl = build_closed_loop(scenario, qcfg, s_bar)
    L = cl.layout
    s0 = initial_state(scenario, qcfg)
    p = scenario.plant
    out = kernels.rk4_original(
        s0, 0.0, h, nsteps, vseq, cl.M, cl.b_r, cl.b_d, cl.b_v, cl.b_dhat, cl.b_fd, cl.c_w, cl.s_bar,
        scenario.r.packed, scenario.d.packed, p.f_d.packed, p.nu, p.nz,
        L.chi_idx, L.chi_n_idx, stride, tail, DIVERGENCE_LIMIT)
    rec_t, rec_s, rec_w, rec_a, sup_e, tail_sup, sat_steps, div = out
    chi = L.chi(rec_s)
    chi_n = rec_s[:, L.chi_n]
    return Trajectory(
        rec_t, chi, chi_n, np.linalg.norm(chi - chi_n, axis=1), np.clip(rec_w, -s_bar, s_bar), rec_w,
        rec_a, rec_s, float(sup_e), float(tail_sup), int(sat_steps), nsteps, div >= 0, "rk4", qcfg.tau, h)


def _phi_functions(Z):
    """``exp(Z)`` and ``phi_1..phi_3`` of a square matrix via one augmented exponential."""
    n = Z.shape[0]
    big = np.zeros((4 * n, 4 * n))
    big[:n, :n] = Z
    for k in range(3):
        big[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = np.eye(n)
    ex = expm(big)
    return ex[:n, :n], ex[:n, n:2 * n], ex[:n, 2 * n:3 * n], ex[:n, 3 * n:4 * n]


def etd_coefficients(Lin, h):
    """Cox-Matthews ETDRK4 matrices for the linear part ``Lin`` and step ``h``."""
    E, p1, p2, p3 = _phi_functions(h * Lin)
    E2, q1, _, _ = _phi_functions(0.5 * h * Lin)
    f1 = h * (p1 - 3 * p2 + 4 * p3)
    f2 = h * (p2 - 2 * p3)
    f3 = h * (-p2 + 4 * p3)
    return tuple(np.ascontiguousarray(m) for m in (E, E2, 0.5 * h * q1, f1, f2, f3))


def transformed_linear_part(blocks, A_s, tau):
    """Linear part of the fast/slow vector field in ``Y = [eta; e; chi_n]``.

    Keeping the ``F`` coupling inside the exponential matters: treated
    explicitly, the initial fast transient leaks an O(h) error into ``e``.
    """
    l2 = blocks.A_f.shape[0]
    ne = A_s.shape[0]
    n = l2 + 2 * ne
    Lin = np.zeros((n, n))
    Lin[:l2, :l2] = blocks.A_f / tau
    Lin[l2:l2 + ne, :l2] = blocks.F
    Lin[l2:l2 + ne, l2:l2 + ne] = A_s
    Lin[l2 + ne:, l2 + ne:] = A_s
    return np.ascontiguousarray(Lin)


def transformed_initial_state(scenario, qcfg, v0=0.0):
    ta = TransformAnalysis(scenario, qcfg)
    s0 = initial_state(scenario, qcfg)
    ts = ta.forward(s0, 0.0, v0)
    chi_n = s0[ta.layout.chi_n]
    return np.concatenate([ts.xi, ts.zeta, ts.e, chi_n])


def _integrate_transformed(scenario, qcfg, s_bar, h, nsteps, vseq, stride, tail, method):
    params = kernel_params(scenario, qcfg, s_bar)
    l, ne = qcfg.l, scenario.aug.n_e
    Y0 = transformed_initial_state(scenario, qcfg, vseq[0] if nsteps else 0.0)
    if method == "rk4-transformed":
        out = kernels.rk4_transformed(Y0, 0.0, h, nsteps, vseq, *params, stride, tail, DIVERGENCE_LIMIT)
    else:
        Lin = transformed_linear_part(
            build_blocks(scenario.plant, scenario.nominal, scenario.controller, qcfg, scenario.plant.g, qcfg.tau),
            scenario.aug.A_s, qcfg.tau)
        coeffs = etd_coefficients(Lin, h)
        out = kernels.etdrk4_transformed(Y0, 0.0, h, nsteps, vseq, Lin, *coeffs, *params,
                                         stride, tail, DIVERGENCE_LIMIT)
    rec_t, rec_y, rec_w, rec_a, sup_e, tail_sup, sat_steps, div = out
    e = rec_y[:, 2 * l:2 * l + ne]
    chi_n = rec_y[:, 2 * l + ne:]
    return Trajectory(
        rec_t, e + chi_n, chi_n, np.linalg.norm(e, axis=1), np.clip(rec_w, -s_bar, s_bar), rec_w, rec_a,
        rec_y, float(sup_e), float(tail_sup), int(sat_steps), nsteps, div >= 0, method, qcfg.tau, h)


def report(traj, eps_T=None, eps_U=None):
    rep = PerformanceReport(
        tau=traj.tau, sup_e=traj.sup_e, tail_sup_e=traj.tail_sup_e,
        saturation_fraction=traj.sat_steps / max(traj.nsteps, 1), diverged=traj.diverged)
    if eps_T is not None:
        rep.pass_transient = bool(not traj.diverged and traj.sup_e < eps_T)
    if eps_U is not None:
        rep.pass_steady = bool(not traj.diverged and traj.tail_sup_e < eps_U)
    return rep


def step_for_tau(cfg, tau, ratio=0.25):
    """Integration step resolving the fast time scale at this ``tau``."""
    h = min(cfg.step, ratio * tau)
    n = int(math.ceil(cfg.horizon / h))
    return cfg.horizon / n


def thread_cap():
    try:
        cap = int(os.environ.get("DOBBENCH_THREADS", "0"))
    except ValueError:
        cap = 0
    return cap if cap > 0 else (os.cpu_count() or 1)


def sweep_tau(scenario, qcfg, cfg, taus, s_bar=None, eps_T=None, eps_U=None, ratio=0.25, workers=None):
    """One report per ``tau``; same noise seed for every run, results in grid order."""
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size == 0 or np.any(taus <= 0):
        raise ConfigError("tau grid must be a nonempty list of positive values")
    if np.any(np.diff(taus) <= 0):
        raise ConfigError("tau grid must be strictly increasing")
    s_bar = resolve_s_bar(scenario, qcfg, s_bar)

    def run(tau):
        q = qcfg.with_tau(tau)
        traj = integrate(scenario, q, cfg, s_bar=s_bar, step=step_for_tau(cfg, tau, ratio))
        return report(traj, eps_T, eps_U)

    workers = min(thread_cap() if workers is None else workers, taus.size)
    if workers <= 1:
        return [run(t) for t in taus]
    # the compiled kernels run with the GIL released
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, taus))
