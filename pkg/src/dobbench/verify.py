"""End-to-end checks of a design: probe simulations and transform cross-checks."""
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .sim import integrate, noise_sequence, step_for_tau
from .transform import TransformAnalysis

# above this many RK4 steps the probe switches to the exponential integrator
RK4_STEP_BUDGET = 2_000_000
# the exponential integrator resolves the fast block exactly, so its step
# only has to follow the slow dynamics and the noise switching
ETD_STEP = 1e-3


@dataclass
class ProbeResult:
    tau: float
    method: str
    step: float
    sup_e: float
    tail_sup_e: float
    margin_T: float
    margin_U: float
    sat_steps: int
    diverged: bool
    passed: bool


@dataclass
class CrossCheck:
    tau: float
    mu: float
    max_e_deviation: float
    max_dhat_residual: float
    samples: int
    skipped_saturated: int
    passed: bool


@dataclass
class Verdict:
    passed: bool
    probes: list
    min_margin_T: float
    min_margin_U: float
    cross_check: CrossCheck = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def probe_taus(design, n_probe):
    """``n_probe`` log-spaced values strictly inside the designed interval."""
    lo, hi = design.tau_lower, design.tau_upper
    if lo is None or hi is None or not design.feasible:
        raise ConfigError("verify_design needs a feasible design")
    if lo <= 0:
        lo = hi * 1e-3
    return np.geomspace(lo, hi, n_probe + 2)[1:-1]


def choose_method(cfg, tau, ratio=0.25):
    h = step_for_tau(cfg, tau, ratio)
    if cfg.horizon / h <= RK4_STEP_BUDGET:
        return "rk4", h
    return "etd", etd_step(cfg)


def etd_step(cfg):
    """Largest step <= ETD_STEP that divides the horizon and the noise half-period."""
    h = min(ETD_STEP, cfg.horizon / 100)
    if cfg.noise == "square" and cfg.mu > 0:
        h = min(h, 0.5 * cfg.period)
        h = 0.5 * cfg.period / math.ceil(0.5 * cfg.period / h)
    return h


def run_probe(scenario, qcfg, cfg, tau, eps_T, eps_U, s_bar, method=None):
    q = qcfg.with_tau(tau)
    auto, h = choose_method(cfg, tau)
    method = method or auto
    if method != auto:
        h = etd_step(cfg) if method == "etd" else step_for_tau(cfg, tau)
    traj = integrate(scenario, q, cfg, s_bar=s_bar, method=method, step=h)
    ok = (not traj.diverged) and traj.sup_e < eps_T and traj.tail_sup_e < eps_U
    return ProbeResult(
        tau=float(tau), method=method, step=h, sup_e=traj.sup_e, tail_sup_e=traj.tail_sup_e,
        margin_T=(eps_T - traj.sup_e) / eps_T, margin_U=(eps_U - traj.tail_sup_e) / eps_U,
        sat_steps=traj.sat_steps, diverged=traj.diverged, passed=bool(ok))


def transform_cross_check(scenario, qcfg, cfg, s_bar, horizon=5.0, step=1e-4, every=50, tol=1e-6):
    """Original vs transformed integration plus the estimate identity along the trajectory."""
    c = replace(cfg, horizon=horizon, step=step, record_every=every)
    a = integrate(scenario, qcfg, c, s_bar=s_bar, method="rk4")
    b = integrate(scenario, qcfg, c, s_bar=s_bar, method="rk4-transformed")
    n = min(len(a.times), len(b.times))
    dev = float(np.max(np.abs((a.chi[:n] - a.chi_n[:n]) - (b.chi[:n] - b.chi_n[:n]))))
    ta = TransformAnalysis(scenario, qcfg)
    vseq = noise_sequence(c, int(round(c.horizon / c.step)), c.step)
    worst, used, skipped = 0.0, 0, 0
    for k in range(n):
        if a.sat_active[k]:
            skipped += 1
            continue
        idx = min(k * every, vseq.size - 1)
        res, mag = ta.dhat_identity_residual(a.states[k], a.times[k], vseq[idx])
        worst = max(worst, res / (1.0 + mag))
        used += 1
    ok = dev < tol and worst < 1e-8 and not (a.diverged or b.diverged)
    return CrossCheck(float(qcfg.tau), c.mu, dev, worst, used, skipped, bool(ok))


def verify_design(design, scenario, qcfg, cfg, n_probe=5, s_bar=None, cross_check=True):
    """Simulate probes inside the designed interval and check both performance bounds."""
    if not design.feasible:
        raise ConfigError("refusing to verify an infeasible design")
    s_bar = design.constants.s_bar if s_bar is None else s_bar
    cfg = cfg.with_noise(design.mu)
    probes = [run_probe(scenario, qcfg, cfg, t, design.eps_T, design.eps_U, s_bar)
              for t in probe_taus(design, n_probe)]
    notes = []
    if any(p.method == "etd" and p.sat_steps for p in probes):
        notes.append("saturation was active during an exponential-integrator probe")
    cc = transform_cross_check(scenario, qcfg, cfg, s_bar) if cross_check else None
    ok = all(p.passed for p in probes) and (cc is None or cc.passed)
    return Verdict(
        passed=bool(ok), probes=probes, min_margin_T=min(p.margin_T for p in probes),
        min_margin_U=min(p.margin_U for p in probes), cross_check=cc, notes=notes)


def tail_stability(scenario, qcfg, cfg, s_bar=None, extend=1.5):
    """Relative change of the tail metric when the horizon grows by ``extend``."""
    a = integrate(scenario, qcfg, cfg, s_bar=s_bar)
    b = integrate(scenario, qcfg, replace(cfg, horizon=cfg.horizon * extend), s_bar=s_bar)
    if a.tail_sup_e == 0:
        return 0.0 if b.tail_sup_e == 0 else math.inf
    return abs(b.tail_sup_e - a.tail_sup_e) / a.tail_sup_e
