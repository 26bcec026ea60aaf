"""Small dense matrix builders and solvers.

Everything here works on float64 numpy arrays of modest size (a few tens of
rows at most), so clarity wins over asymptotic efficiency.
"""
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, NotHurwitzError, NumericalError


class SpectrumSummary(NamedTuple):
    lambda_min: float
    lambda_max: float


def unit(i, size):
    """Unit vector with a one in (1-based) position ``i``."""
    e = np.zeros(size)
    e[i - 1] = 1.0
    return e


def build_companion(i):
    """Return the up-shift matrix ``A_i`` and last-unit column ``B_i``."""
    if i < 1:
        raise ConfigError(f"companion size must be >= 1, got {i}")
    A = np.eye(i, k=1)
    B = np.zeros((i, 1))
    B[-1, 0] = 1.0
    return A, B


def build_M(C, i, j):
    """Stack ``[C; C A_i; ...; C A_i^(j-1)]`` into a j x i matrix."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape != (1, i):
        raise ConfigError(f"C must be 1x{i}, got {C.shape}")
    if j < 1:
        raise ConfigError(f"j must be >= 1, got {j}")
    A, _ = build_companion(i)
    rows = [C[0]]
    for _ in range(j - 1):
        rows.append(rows[-1] @ A)
    return np.vstack(rows)


def build_T(a, tau, l=None):
    """Unit upper-triangular Toeplitz matrix ``T_tau``.

    Entry (r, r+k) is ``a_k tau^k / a_0``.
    """
    a = np.asarray(a, dtype=float)
    if l is None:
        l = a.size
    if a.size != l:
        raise ConfigError(f"need {l} coefficients a_0..a_(l-1), got {a.size}")
    if a[0] <= 0:
        raise ConfigError("a_0 must be positive")
    if tau <= 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    T = np.zeros((l, l))
    for k in range(l):
        T += np.eye(l, k=k) * (a[k] * tau**k / a[0])
    return T


def build_Cq(a0, c, tau, l, m):
    """Numerator row ``C_tau`` (1 x l) of the Q-filter."""
    c = np.asarray(c, dtype=float).ravel()
    if not l >= m > 0:
        raise ConfigError(f"need l >= m > 0, got l={l}, m={m}")
    if c.size != l - m:
        raise ConfigError(f"need {l - m} numerator coefficients, got {c.size}")
    row = np.zeros((1, l))
    row[0, 0] = 1.0
    for k, ck in enumerate(c, start=1):
        row[0, k] = ck * tau**k / a0
    return row


def upper_unit_inverse(T):
    """Inverse of a unit upper-triangular matrix by back-substitution."""
    n = T.shape[0]
    X = np.zeros_like(T)
    for col in range(n):
        X[col, col] = 1.0
        for row in range(col - 1, -1, -1):
            X[row, col] = -T[row, row + 1:col + 1] @ X[row + 1:col + 1, col]
    return X


def eigvals(A):
    """General eigenvalues (LAPACK Hessenberg reduction + shifted QR)."""
    A = np.asarray(A, dtype=float)
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge: {exc}") from exc


def is_hurwitz(A):
    """Return ``(hurwitz, margin)`` with margin the largest real part."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"square matrix required, got shape {A.shape}")
    margin = float(np.max(eigvals(A).real))
    return margin < 0.0, margin


def require_hurwitz(A, what="matrix"):
    ok, margin = is_hurwitz(A)
    if not ok:
        ev = eigvals(A)
        worst = ev[np.argmax(ev.real)]
        raise NotHurwitzError(f"{what} is not Hurwitz: eigenvalue {worst:.6g}", eigenvalue=worst)
    return margin


def solve_lyapunov(A):
    """Solve ``A^T P + P A = -I`` through the vectorized n^2 x n^2 system."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    require_hurwitz(A, "Lyapunov operand")
    eye = np.eye(n)
    # row-major vec: vec(A^T P) = (A^T kron I) vec P, vec(P A) = (I kron A^T) vec P
    K = np.kron(A.T, eye) + np.kron(eye, A.T)
    try:
        P = np.linalg.solve(K, -eye.ravel()).reshape(n, n)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular Lyapunov system: {exc}") from exc
    P = 0.5 * (P + P.T)
    if not np.all(np.isfinite(P)):
        raise NumericalError("non-finite Lyapunov solution")
    return P


def lyapunov_residual(A, P):
    return float(np.max(np.abs(A.T @ P + P @ A + np.eye(A.shape[0]))))


def jacobi_eigenvalues(P, tol=1e-12, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(P, dtype=float)
    n = a.shape[0]
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off < tol * scale:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-18 * scale:
                    # far below the stopping threshold; rotating would overflow theta
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
    raise NumericalError("Jacobi sweeps did not converge")


def sym_extremal_eigs(P, require_pd=False):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ConfigError(f"square matrix required, got shape {P.shape}")
    if np.max(np.abs(P - P.T)) > 1e-12 * max(1.0, np.max(np.abs(P))):
        raise ConfigError("matrix is not symmetric")
    ev = jacobi_eigenvalues(P)
    summary = SpectrumSummary(float(ev[0]), float(ev[-1]))
    if require_pd and summary.lambda_min <= 0:
        raise NumericalError(f"matrix is not positive definite (lambda_min={summary.lambda_min:.3g})")
    return summary
