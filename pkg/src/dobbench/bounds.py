"""Lyapunov constants, gain bounds and the tau design procedure.

Every constant here is conservative by construction.  Bounds the analysis
only asserts to exist (sup of ``Xi*`` and its derivative, sup of the lumped
disturbance) are estimated by seeded Monte-Carlo sampling and inflated.
"""
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .closedloop import initial_state
from .errors import ConfigError, NumericalError
from .linalg import lyapunov_residual, require_hurwitz, solve_lyapunov, sym_extremal_eigs
from .model import noise_input_vector
from .transform import Cbar_bold, Cq_bold, TransformAnalysis, build_blocks, star_batch

INFLATION = 1.2
ROOT_RTOL = 1e-10
ROOT_ITERS = 200
KAPPA_NAMES = ("kappa1", "kappa2", "kappa3", "kappa4", "kappa5")


@dataclass
class DesignSpec:
    eps_U: float
    eps_T: float
    mu: float = 0.0
    cU: Optional[float] = None
    cT: Optional[float] = None
    budget: int = 100_000
    settle_eig: str = "s"
    g_points: int = 21
    seed: int = 0
    horizon: float = 30.0
    kappa_scale: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.eps_T > self.eps_U > 0:
            raise ConfigError(f"need eps_T > eps_U > 0, got eps_U={self.eps_U}, eps_T={self.eps_T}")
        if self.mu < 0:
            raise ConfigError("mu must be nonnegative")
        if self.settle_eig not in ("s", "f"):
            raise ConfigError("settle_eig must be 's' or 'f'")
        bad = set(self.kappa_scale) - set(KAPPA_NAMES)
        if bad:
            raise ConfigError(f"unknown kappa override(s): {sorted(bad)}")

    @classmethod
    def from_dict(cls, doc):
        keys = ("eps_U", "eps_T", "mu", "cU", "cT", "budget", "settle_eig", "g_points", "kappa_scale")
        return cls(**{k: doc[k] for k in keys if k in doc})

    def with_mu(self, mu):
        return replace(self, mu=float(mu))


@dataclass
class LyapunovData:
    P_f: list
    P_s: np.ndarray
    lam_f_min: float
    lam_f_max: float
    lam_s_min: float
    lam_s_max: float
    residual_f: float
    residual_s: float
    g_grid: np.ndarray


def worst_case_lyapunov(scenario, qcfg, g_points=21):
    """Solve both Lyapunov equations and worst-case the spectra over the gain grid."""
    plant, nom, ctrl = scenario.plant, scenario.nominal, scenario.controller
    grid = plant.g_grid(g_points) if g_points > 1 else np.array([plant.g])
    Ps, lo, hi, res = [], np.inf, 0.0, 0.0
    for g in grid:
        A_f = build_blocks(plant, nom, ctrl, qcfg, g, qcfg.tau).A_f
        require_hurwitz(A_f, f"A_f at g={g:.6g}")
        P = solve_lyapunov(A_f)
        res = max(res, lyapunov_residual(A_f, P))
        spec = sym_extremal_eigs(P, require_pd=True)
        lo, hi = min(lo, spec.lambda_min), max(hi, spec.lambda_max)
        Ps.append(P)
    # I_{n_e} on the right-hand side; the slow state has n_e components
    P_s = solve_lyapunov(scenario.aug.A_s)
    spec_s = sym_extremal_eigs(P_s, require_pd=True)
    return LyapunovData(Ps, P_s, lo, hi, spec_s.lambda_min, spec_s.lambda_max, res,
                        lyapunov_residual(scenario.aug.A_s, P_s), grid)


@dataclass
class GainConstants:
    g_check: float
    nu: int
    l: int
    lam_f_min: float
    lam_f_max: float
    lam_s_min: float
    lam_s_max: float
    kappa1: float
    kappa2: float
    kappa3: float
    kappa4: float
    kappa5: float
    sigma1: float
    sigma2: float
    sigma3: float
    sigma4: float
    sigma5: float
    b0: float
    b1: float
    b2: float
    b3: float
    k_f: float
    sup_d: float
    s_bar: float
    cU: float
    cT: float
    alpha_norm: float
    D: float
    mu: float
    t_star: float = math.inf
    max_Cq_bold: float = 0.0
    settle_eig: str = "s"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_parts(cls, *, g_check, nu, l, lam_f_min, lam_f_max, lam_s_min, lam_s_max, kappa1, kappa2,
                   kappa3, kappa4, kappa5, alpha_norm, D, **rest):
        """Derive the sigma and b constants from the kappas and spectra."""
        sf = lam_f_max / math.sqrt(lam_f_min)
        ss = 2.0 * lam_s_max / math.sqrt(lam_s_min)
        s1 = 4.0 * math.sqrt(g_check**2 + 1.0) * kappa1 * sf
        s2 = 4.0 * kappa2 * sf
        return cls(
            g_check=g_check, nu=nu, l=l, lam_f_min=lam_f_min, lam_f_max=lam_f_max, lam_s_min=lam_s_min,
            lam_s_max=lam_s_max, kappa1=kappa1, kappa2=kappa2, kappa3=kappa3, kappa4=kappa4, kappa5=kappa5,
            sigma1=s1, sigma2=s2, sigma3=4.0 * alpha_norm * sf, sigma4=4.0 * g_check * abs(D) * sf,
            sigma5=s1 * kappa3 + s2, b0=1.0 / lam_s_max, b1=ss * kappa4, b2=ss * g_check * kappa1 * kappa3,
            b3=ss * kappa5, alpha_norm=alpha_norm, D=D, **rest)


# --------------------------------------------------------------------------
# sampling-based bounds
# --------------------------------------------------------------------------


def nominal_trajectory(scenario, horizon, step=1e-3):
    """RK4 solution of the augmented nominal loop from the matched initial state."""
    A, B = scenario.aug.A_s, scenario.aug.B
    n = int(math.ceil(horizon / step))
    h = horizon / n
    ts = h * np.arange(n + 1)
    rs, _ = scenario.r(ts)
    rh, _ = scenario.r(ts[:-1] + 0.5 * h)
    out = np.zeros((n + 1, A.shape[0]))
    x = np.concatenate([scenario.x0, np.zeros(scenario.plant.nz), scenario.theta0, scenario.z0])
    # chi_n(0) = chi(0), and the DOB starts at z_bar = 0
    out[0] = x
    for k in range(n):
        k1 = A @ x + B * rs[k]
        k2 = A @ (x + 0.5 * h * k1) + B * rh[k]
        k3 = A @ (x + 0.5 * h * k2) + B * rh[k]
        k4 = A @ (x + h * k3) + B * rs[k + 1]
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = x
    return ts, out


class SampleStream:
    """Seeded samples of ``(t, chi, v)`` with ``chi - chi_n`` in the level set of ``P_s``.

    Samples come in fixed-size blocks so a larger budget always extends a
    smaller one; maxima over the stream are therefore monotone in the budget.
    """

    BLOCK = 4096

    def __init__(self, scenario, P_s, cT, mu, horizon, seed=0):
        self.ts, self.chin = nominal_trajectory(scenario, horizon)
        self.R_inv = np.linalg.inv(np.linalg.cholesky(P_s).T)
        self.radius = math.sqrt(cT)
        self.mu = mu
        self.seed = seed

    def blocks(self, budget):
        rng = np.random.default_rng(self.seed)
        ne = self.R_inv.shape[0]
        left = budget
        while left > 0:
            n = self.BLOCK
            u = rng.normal(size=(n, ne))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            rad = rng.uniform(size=n) ** (1.0 / ne)
            rad[rng.uniform(size=n) < 0.3] = 1.0        # boundary of the level set
            e = (self.radius * rad)[:, None] * u @ self.R_inv.T
            idx = rng.integers(0, self.ts.size, size=n)
            v = self.mu * rng.uniform(-1.0, 1.0, size=n)
            sgn = rng.choice([-1.0, 1.0], size=n)
            v = np.where(rng.uniform(size=n) < 0.5, self.mu * sgn, v)
            s = rng.uniform(-1.0, 1.0, size=n)
            s = np.where(rng.uniform(size=n) < 0.5, np.sign(s), s)
            take = min(n, left)
            yield (self.ts[idx][:take], (self.chin[idx] + e)[:take], v[:take], s[:take])
            left -= take


def sample_bounds(scenario, qcfg, P_s, cT, mu, s_bar=None, budget=100_000, horizon=30.0, seed=0):
    """Raw (uninflated) maxima of ``|Xi*_xi|``, ``|dXi*_eta/dt|`` and ``|d|`` over the samples.

    ``dXi*_eta/dt`` is only evaluated when ``s_bar`` is given, since the
    estimate enters it through the plant input.
    """
    stream = SampleStream(scenario, P_s, cT, mu, horizon, seed)
    k1 = k2 = sd = 0.0
    for t, chi, v, s in stream.blocks(budget):
        dh = s * (s_bar if s_bar is not None else 0.0)
        Xi, xdn, zd, bfd = star_batch(scenario, qcfg.a0, chi, t, v, dh)
        k1 = max(k1, float(np.max(np.linalg.norm(Xi, axis=1))))
        sd = max(sd, float(np.max(np.abs(bfd))))
        if s_bar is not None:
            k2 = max(k2, float(np.max(np.hypot(xdn, zd))))
    if not all(np.isfinite([k1, k2, sd])) or max(k1, k2, sd) > 1e12:
        raise ConfigError("sampled bounds are unbounded; f_d or the signals grow too fast")
    return k1, k2, sd


def default_s_bar(scenario, qcfg, spec=None, mu=0.0):
    """Saturation level ten times the sampled sup of the lumped disturbance.

    Without a design spec the level set is taken for ``eps_T = 1``.
    """
    spec = DesignSpec(eps_U=0.5, eps_T=1.0, mu=mu) if spec is None else spec
    P_s = solve_lyapunov(scenario.aug.A_s)
    lam = sym_extremal_eigs(P_s, require_pd=True).lambda_min
    _, cT = level_constants(spec, lam)
    _, _, sd = sample_bounds(scenario, qcfg, P_s, cT, spec.mu, None, spec.budget, spec.horizon, spec.seed)
    return 10.0 * INFLATION * sd


# --------------------------------------------------------------------------
# tau-dependent norms
# --------------------------------------------------------------------------


def cq_check_norm(scenario, qcfg, tau):
    """``||[Cq_bold 0]||`` at ``tau`` (row vector, Euclidean norm)."""
    return float(np.linalg.norm(Cq_bold(qcfg, scenario.nominal, scenario.plant.nu, tau)))


def cbar_norm(scenario, qcfg, tau):
    return float(np.linalg.norm(Cbar_bold(qcfg, scenario.nominal, scenario.plant.nu, scenario.aug.n_e, tau)))


def _bisect(fn, lo, hi, log=True):
    """Root of ``fn`` (sign change) on ``[lo, hi]`` to relative tolerance 1e-10."""
    flo = fn(lo)
    for _ in range(ROOT_ITERS):
        mid = math.sqrt(lo * hi) if log and lo > 0 else 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= ROOT_RTOL * hi:
            break
    return 0.5 * (lo + hi)


def tau_bar1(scenario, qcfg, lam_f_max, g_check, start=1e-6, factor=1.2, cap=1e3):
    """Smallest ``tau`` with ``4 tau lam_f_max sqrt(g^2+1) ||C_check_tau|| = 1``."""
    if not np.any(scenario.nominal.phi_bar):
        return math.inf
    return tau_bar1_from(lambda tau: cq_check_norm(scenario, qcfg, tau), lam_f_max, g_check, start, factor, cap)


def tau_bar1_from(norm, lam_f_max, g_check, start=1e-6, factor=1.2, cap=1e3):
    """Same root for an arbitrary ``tau -> ||C_check_tau||``: geometric scan, then bisection."""
    c = 4.0 * lam_f_max * math.sqrt(g_check**2 + 1.0)

    def G(tau):
        return c * tau * norm(tau) - 1.0

    lo = start
    if G(lo) >= 0:
        return _bisect(G, 0.0, lo, log=False)
    while lo < cap:
        hi = lo * factor
        if G(hi) >= 0:
            return _bisect(G, lo, hi)
        lo = hi
    return math.inf


def sigma_tau(scenario, qcfg, tau, lam_f_max, g_check):
    return 1.0 / (2.0 * lam_f_max * tau) - 2.0 * math.sqrt(g_check**2 + 1.0) * cq_check_norm(scenario, qcfg, tau)


def tau_norm_grid(tb1, points=200):
    top = min(tb1, 1e3)
    return np.geomspace(top * 1e-8, top * (1 - 1e-9), points)


# --------------------------------------------------------------------------
# scalar functions of the design
# --------------------------------------------------------------------------


def sigma_f(mu, tau, gc):
    if tau <= 0:
        if mu > 0:
            raise ConfigError("Sigma_f has a pole at tau = 0 for mu > 0")
        return 0.0
    return gc.sigma3 * tau ** (-gc.nu) * mu + gc.sigma4 * mu + gc.sigma5 * tau


def sigma_bar(mu, tau, gc):
    return gc.b1 * sigma_f(mu, tau, gc) + gc.b2 * tau + gc.b3 * mu


def sigma_bar_dtau(mu, tau, gc):
    return gc.b2 - gc.nu * gc.b1 * gc.sigma3 * mu / tau ** (gc.nu + 1) + gc.b1 * gc.sigma5


def sigma_bar_d2tau(mu, tau, gc):
    return gc.nu * (gc.nu + 1) * gc.b1 * gc.sigma3 * mu / tau ** (gc.nu + 2)


def tau_dagger(mu, gc):
    """Minimizer of ``sigma_bar(mu, .)``; 0 in the noise-free limit."""
    if mu <= 0:
        return 0.0
    return (gc.nu * gc.b1 * gc.sigma3 * mu / (gc.b1 * gc.sigma5 + gc.b2)) ** (1.0 / (gc.nu + 1))


def h(mu, gc):
    if mu <= 0:
        return 0.0
    return sigma_bar(mu, tau_dagger(mu, gc), gc)


def h_inv(k0, gc):
    """Inverse of the increasing function ``h`` by bracketing and bisection."""
    if k0 <= 0:
        raise ConfigError("h_inv needs k0 > 0")
    lo, hi = 1.0, 1.0
    for _ in range(ROOT_ITERS):
        if h(lo, gc) < k0:
            break
        lo *= 0.5
    else:
        raise NumericalError("h_inv: lower bracket not found")
    for _ in range(ROOT_ITERS):
        if h(hi, gc) > k0:
            break
        hi *= 2.0
    else:
        raise NumericalError("h_inv: upper bracket not found")
    return _bisect(lambda m: h(m, gc) - k0, lo, hi)


def mu_tilde(k0, tau, gc):
    nu = gc.nu
    num = (k0 - gc.b2 * tau - gc.b1 * gc.sigma5 * tau) * tau**nu
    return num / (gc.b1 * gc.sigma3 + (gc.b3 + gc.b1 * gc.sigma4) * tau**nu)


def sigma_bar_roots(mu, k0, gc):
    """``(tau_lo, tau_hi)`` with ``sigma_bar(mu, tau) < k0`` exactly inside; None if empty."""
    slope = gc.b1 * gc.sigma5 + gc.b2
    if mu <= 0:
        return (0.0, k0 / slope) if slope > 0 else (0.0, math.inf)
    td = tau_dagger(mu, gc)
    if sigma_bar(mu, td, gc) >= k0:
        return None
    f = lambda tau: sigma_bar(mu, tau, gc) - k0
    lo = td
    for _ in range(ROOT_ITERS):
        lo *= 0.5
        if f(lo) > 0:
            break
    else:
        raise NumericalError("left root of sigma_bar not bracketed")
    hi = td
    for _ in range(ROOT_ITERS):
        hi *= 2.0
        if f(hi) > 0:
            break
    else:
        raise NumericalError("right root of sigma_bar not bracketed")
    return _bisect(f, lo, td), _bisect(f, td, hi)


def settle_time(tau, gc, scenario, qcfg):
    """Time bound for the fast state to enter its invariant set (clamped at 0)."""
    st = sigma_tau(scenario, qcfg, tau, gc.lam_f_max, gc.g_check)
    if st <= 0:
        raise ConfigError(f"sigma_tau <= 0 at tau={tau:.3g}; tau must stay below tau_bar1")
    lam = gc.lam_s_max if gc.settle_eig == "s" else gc.lam_f_max
    return settle_time_from(lam * gc.k_f / (gc.sigma5**2 * tau ** (2 * (gc.l + 1))), st)


def settle_time_from(log_arg, st):
    return max(0.0, math.log(log_arg) / st)


def escape_time(gc, mu=None):
    """Lower bound on the time before ``e`` can leave the level set, under saturation."""
    mu = gc.mu if mu is None else mu
    Bbar = 2.0 * gc.lam_s_max / math.sqrt(gc.lam_s_min) * (gc.g_check * (gc.sup_d + gc.s_bar) + gc.kappa5 * mu)
    return escape_time_from(gc.b0, Bbar, gc.cT)


def escape_time_from(b0, Bbar, cT):
    if Bbar / b0 <= math.sqrt(cT):
        return math.inf
    return -(2.0 / b0) * math.log(1.0 - b0 * math.sqrt(cT) / Bbar)


def tau_bar2(gc, scenario, qcfg, tb1, start=1e-14, factor=1.2):
    """Largest ``tau`` (capped at ``tau_bar1``) keeping the settle time below the escape time."""
    if math.isinf(gc.t_star):
        return tb1
    cap = tb1 * (1 - 1e-9) if math.isfinite(tb1) else 1e3
    f = lambda tau: settle_time(tau, gc, scenario, qcfg) - gc.t_star
    lo = start
    if f(lo) >= 0:
        return 0.0
    while lo < cap:
        hi = min(lo * factor, cap)
        if f(hi) >= 0:
            return _bisect(f, lo, hi)
        lo = hi
    return tb1


def initial_fast_bound(scenario, qcfg, points=100):
    """``k_f``: inflated sup over ``tau`` in (0, 1] of ``||tau^l eta(0)||^2``."""
    s0 = initial_state(scenario, qcfg)
    best = 0.0
    for tau in np.linspace(1.0 / points, 1.0, points):
        q = qcfg.with_tau(tau)
        ts = TransformAnalysis(scenario, q).forward(s0, 0.0, 0.0)
        best = max(best, float(np.sum((tau**qcfg.l * ts.eta) ** 2)))
    return INFLATION * best


# --------------------------------------------------------------------------
# full pipeline
# --------------------------------------------------------------------------


def level_constants(spec, lam_s_min):
    cU = spec.cU if spec.cU is not None else 0.9 * lam_s_min * spec.eps_U**2
    cT = spec.cT if spec.cT is not None else 0.5 * lam_s_min * (spec.eps_U**2 + spec.eps_T**2)
    if not cU < lam_s_min * spec.eps_U**2 < cT < lam_s_min * spec.eps_T**2:
        raise ConfigError("level constants violate cU < lam_s_min eps_U^2 < cT < lam_s_min eps_T^2")
    return cU, cT


def estimate_constants(scenario, qcfg, spec, s_bar=None, lyap=None):
    """All gain constants for one scenario, filter shape and design spec."""
    plant, nom, ctrl = scenario.plant, scenario.nominal, scenario.controller
    lyap = worst_case_lyapunov(scenario, qcfg, spec.g_points) if lyap is None else lyap
    cU, cT = level_constants(spec, lyap.lam_s_min)
    g_check = plant.g_check
    k1, _, sd = sample_bounds(scenario, qcfg, lyap.P_s, cT, spec.mu, None, spec.budget, spec.horizon, spec.seed)
    sup_d = INFLATION * sd
    if s_bar is None:
        s_bar = qcfg.s_bar if qcfg.s_bar is not None else 10.0 * sup_d
    _, k2, _ = sample_bounds(scenario, qcfg, lyap.P_s, cT, spec.mu, s_bar, spec.budget, spec.horizon, spec.seed)
    tb1 = tau_bar1(scenario, qcfg, lyap.lam_f_max, g_check)
    grid = tau_norm_grid(tb1)
    k3 = max(cbar_norm(scenario, qcfg, t) for t in grid)
    max_cq = max(cq_check_norm(scenario, qcfg, t) for t in grid)
    F_norm = max(np.linalg.norm(build_blocks(plant, nom, ctrl, qcfg, g, qcfg.tau).F, 2) for g in lyap.g_grid)
    k4 = float(F_norm) + g_check * max_cq
    k5 = g_check * abs(ctrl.D) + abs(nom.g_bar * ctrl.D) + float(np.linalg.norm(noise_input_vector(plant, nom, ctrl)))
    kap = dict(kappa1=INFLATION * k1, kappa2=INFLATION * k2, kappa3=k3, kappa4=k4, kappa5=k5)
    for name, scale in spec.kappa_scale.items():
        kap[name] *= scale
    alpha = build_blocks(plant, nom, ctrl, qcfg, plant.g, qcfg.tau).alpha
    gc = GainConstants.from_parts(
        g_check=g_check, nu=plant.nu, l=qcfg.l, lam_f_min=lyap.lam_f_min, lam_f_max=lyap.lam_f_max,
        lam_s_min=lyap.lam_s_min, lam_s_max=lyap.lam_s_max, alpha_norm=float(np.linalg.norm(alpha)),
        D=ctrl.D, k_f=initial_fast_bound(scenario, qcfg), sup_d=sup_d, s_bar=float(s_bar), cU=cU, cT=cT,
        mu=spec.mu, max_Cq_bold=max_cq, settle_eig=spec.settle_eig, **kap)
    gc.t_star = escape_time(gc)
    return gc, tb1, lyap


@dataclass
class DesignResult:
    mu: float
    eps_U: float
    eps_T: float
    k0: float
    mu_star_1: float
    mu_star_2: float
    mu_star: float
    tau_bar1: float
    tau_bar2: float
    tau_dagger: float
    tau_lo: Optional[float]
    tau_hi: Optional[float]
    tau_lower: Optional[float]
    tau_upper: Optional[float]
    feasible: bool
    recommended_tau: Optional[float]
    binding: str
    constants: GainConstants
    t_star: float = math.inf
    notes: list = field(default_factory=list)

    def to_dict(self):
        out = asdict(self)
        out["constants"] = self.constants.to_dict()
        return out


def design_from_constants(gc, tb1, tb2, spec):
    mu = spec.mu
    k0 = math.sqrt(gc.cU) / gc.lam_s_max
    mu1 = h_inv(k0, gc)
    tmin = min(tb1, tb2)
    mu2 = mu_tilde(k0, tmin, gc) if math.isfinite(tmin) else math.inf
    mu_star = mu1 if tmin >= tau_dagger(mu1, gc) else mu2
    td = tau_dagger(mu, gc)
    roots = sigma_bar_roots(mu, k0, gc)
    notes = []
    if roots is None:
        lo3 = hi3 = None
    else:
        lo3, hi3 = roots
    uppers = {"tau_bar1": tb1, "tau_bar2": tb2}
    if hi3 is not None:
        uppers["tau_bar3"] = hi3
    binding = min(uppers, key=uppers.get)
    tau_upper = uppers[binding]
    tau_lower = lo3
    feasible = True
    if not mu < mu_star:
        feasible, binding = False, "mu_star"
        notes.append(f"noise level {mu:.6g} is not below the affordable level {mu_star:.6g}")
    # the first failed constraint is reported as binding
    if roots is None:
        binding = binding if not feasible else "tau_bar3"
        feasible = False
        notes.append("sigma_bar stays above k0 for every tau")
        tau_upper = None
    elif not tau_lower < tau_upper:
        binding = binding if not feasible else "tau_lower_3"
        feasible = False
        notes.append(f"lower bound {tau_lower:.6g} is not below upper bound {tau_upper:.6g}")
    rec = None
    if feasible:
        if mu > 0 and tau_lower < td < tau_upper:
            rec = td
        else:
            rec = 0.5 * (tau_lower + tau_upper) if mu > 0 else 0.5 * tau_upper
    if mu == 0:
        notes.append("noise-free design: the lower end of the interval is zero")
    return DesignResult(
        mu=mu, eps_U=spec.eps_U, eps_T=spec.eps_T, k0=k0, mu_star_1=mu1, mu_star_2=mu2, mu_star=mu_star,
        tau_bar1=tb1, tau_bar2=tb2, tau_dagger=td, tau_lo=lo3, tau_hi=hi3, tau_lower=tau_lower,
        tau_upper=tau_upper, feasible=feasible, recommended_tau=rec, binding=binding, constants=gc,
        t_star=gc.t_star, notes=notes)


def design_tau(scenario, qcfg, spec, s_bar=None, lyap=None):
    """Affordable noise level and admissible ``tau`` interval for ``spec``."""
    gc, tb1, _ = estimate_constants(scenario, qcfg, spec, s_bar, lyap)
    tb2 = tau_bar2(gc, scenario, qcfg, tb1)
    return design_from_constants(gc, tb1, tb2, spec)
