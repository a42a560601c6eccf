"""Trust-region subproblem solvers and smallest-eigenpair extraction.

The regularized subproblem is

    min_s  g^T s + 1/2 s^T (H + reg*I) s   s.t.  |s| <= radius,

whose exact solution is characterized by a multiplier lam >= 0 with
(H + reg*I + lam*I) s = -g, complementarity lam*(radius - |s|) = 0 and
H + reg*I + lam*I psd.  The exact solver eigendecomposes the shifted matrix
and runs a safeguarded Newton iteration on the secular equation in lam,
with explicit hard-case handling; the approximate solver is the classic
Steihaug-Toint truncated CG.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .errors import ConvergenceFailure, NumericalBreakdown

Array = np.ndarray

# Below this size dense eigendecomposition beats iterative methods.
_DENSE_EIG_LIMIT = 512
_HARD_CASE_RTOL = 1e-12


@dataclass
class TRProblem:
    H: Array
    g: Array
    reg: float
    radius: float

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        n = self.g.shape[0]
        if self.H.shape != (n, n):
            raise ValueError(f"H has shape {self.H.shape}, expected ({n}, {n})")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.reg < 0:
            raise ValueError("reg must be nonnegative")

    def shifted(self) -> Array:
        return self.H + self.reg * np.eye(self.g.shape[0])

    def objective(self, s: Array) -> float:
        return float(self.g @ s + 0.5 * s @ (self.shifted() @ s))


@dataclass
class TRSolution:
    s: Array
    lam: float
    kkt_residual: float
    on_boundary: bool
    hard_case: bool


@dataclass
class EigPair:
    value: float
    vector: Array


def _phi(ghat: Array, d: Array, lam: float) -> float:
    """Norm of the shifted-system solution in the eigenbasis."""
    return float(np.linalg.norm(ghat / (d + lam)))


def solve_tr_exact(p: TRProblem, tol: float = 1e-10) -> TRSolution:
    """Exact primal-dual solution of the trust-region subproblem.

    Returns the minimizer s and multiplier lam satisfying the optimality
    system to tolerance tol.  The hard case (gradient orthogonal to the
    bottom eigenspace with slack left at lam = -lambda_min) is resolved by
    adding a bottom-eigenvector component reaching the boundary.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    Ht = p.shifted()
    n = p.g.shape[0]
    d, Q = np.linalg.eigh(Ht)
    ghat = Q.T @ p.g
    radius = p.radius

    # Interior solution: positive definite and Newton step within the radius.
    if d[0] > 0.0:
        shat = -ghat / d
        if np.linalg.norm(shat) <= radius:
            s = Q @ shat
            return TRSolution(
                s=s,
                lam=0.0,
                kkt_residual=float(np.linalg.norm(Ht @ s + p.g)),
                on_boundary=False,
                hard_case=False,
            )

    lam_lb = float(max(0.0, -d[0]))
    gnorm = float(np.linalg.norm(p.g))

    # Hard case: no gradient component in the bottom eigenspace and the
    # least-norm boundary multiplier still leaves room inside the radius.
    bottom = (d - d[0]) <= _HARD_CASE_RTOL * max(1.0, abs(d[0]))
    g_bottom = float(np.linalg.norm(ghat[bottom]))
    if d[0] <= 0.0 and g_bottom <= _HARD_CASE_RTOL * max(gnorm, 1e-300):
        shat = np.zeros(n)
        free = ~bottom
        shat[free] = -ghat[free] / (d[free] + lam_lb)
        perp_norm = float(np.linalg.norm(shat))
        if perp_norm <= radius:
            alpha = np.sqrt(max(radius**2 - perp_norm**2, 0.0))
            s = Q @ shat + alpha * Q[:, 0]
            lam = lam_lb
            res = float(np.linalg.norm(Ht @ s + lam * s + p.g))
            return TRSolution(
                s=s, lam=lam, kkt_residual=res, on_boundary=True, hard_case=True
            )
        # No room: fall through; the secular equation on the non-bottom
        # components has a root above lam_lb.
        ghat = np.where(bottom, 0.0, ghat)

    # Boundary solution: root of |s(lam)| = radius for lam in (lam_lb, ub].
    lo = lam_lb
    hi = lam_lb + gnorm / radius
    if not np.isfinite(hi) or _phi(ghat, d, hi) > radius:
        raise NumericalBreakdown("failed to bracket the secular equation root")
    lam = 0.5 * (lo + hi) if lo > 0 else min(hi, lam_lb + 1.0)
    for _ in range(200):
        phi = _phi(ghat, d, lam)
        if abs(phi - radius) <= 1e-13 * radius:
            break
        if phi > radius:
            lo = lam
        else:
            hi = lam
        # Newton step on 1/phi(lam) - 1/radius, safeguarded by bisection.
        denom = d + lam
        sum3 = float(np.sum(ghat**2 / denom**3))
        if sum3 > 0 and phi > 0:
            lam_new = lam - (phi**2) * (radius - phi) / (radius * sum3)
        else:
            lam_new = 0.5 * (lo + hi)
        if not (lo < lam_new < hi):
            lam_new = 0.5 * (lo + hi)
        if abs(lam_new - lam) <= 1e-17 * (1.0 + lam):
            lam = lam_new
            break
        lam = lam_new
    lam = float(max(lam, lam_lb))
    shat = -ghat / (d + lam)
    s = Q @ shat
    res = float(np.linalg.norm(Ht @ s + lam * s + p.g))
    return TRSolution(s=s, lam=lam, kkt_residual=res, on_boundary=True, hard_case=False)


def solve_tr_cg(p: TRProblem, max_iters: int, tol: float = 1e-8) -> TRSolution:
    """Steihaug-Toint truncated CG on the regularized model.

    Stops at the interior CG solution, or on the boundary when negative
    curvature is met or an iterate crosses the radius.  No multiplier is
    produced: ``lam`` is 0 and ``on_boundary`` records which case occurred.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    Ht = p.shifted()
    radius = p.radius
    n = p.g.shape[0]
    s = np.zeros(n)
    r = p.g.copy()  # gradient of the model at s
    gnorm = float(np.linalg.norm(r))
    if gnorm == 0.0:
        return TRSolution(s=s, lam=0.0, kkt_residual=0.0, on_boundary=False, hard_case=False)
    dvec = -r
    rr = float(r @ r)
    for _ in range(max_iters):
        Hd = Ht @ dvec
        curv = float(dvec @ Hd)
        if curv <= 0.0:
            s = s + _boundary_step(s, dvec, radius) * dvec
            return _cg_solution(p, Ht, s, on_boundary=True)
        alpha = rr / curv
        s_next = s + alpha * dvec
        if np.linalg.norm(s_next) >= radius:
            s = s + _boundary_step(s, dvec, radius) * dvec
            return _cg_solution(p, Ht, s, on_boundary=True)
        s = s_next
        r = r + alpha * Hd
        rr_next = float(r @ r)
        if np.sqrt(rr_next) <= tol * gnorm:
            break
        dvec = -r + (rr_next / rr) * dvec
        rr = rr_next
    return _cg_solution(p, Ht, s, on_boundary=False)


def _cg_solution(p: TRProblem, Ht: Array, s: Array, on_boundary: bool) -> TRSolution:
    return TRSolution(
        s=s,
        lam=0.0,
        kkt_residual=float(np.linalg.norm(Ht @ s + p.g)),
        on_boundary=on_boundary,
        hard_case=False,
    )


def _boundary_step(s: Array, d: Array, radius: float) -> float:
    """Positive tau with |s + tau*d| = radius."""
    a = float(d @ d)
    b = float(s @ d)
    c = float(s @ s) - radius**2
    disc = b**2 - a * c
    if a <= 0.0 or disc < 0.0:
        raise NumericalBreakdown("degenerate boundary crossing in CG")
    return (-b + np.sqrt(disc)) / a


def min_eigpair(H: Array, orient_against: Array) -> EigPair:
    """Smallest eigenpair of symmetric H, the vector oriented so that
    ``orient_against . u <= 0`` (exact ties keep the computed sign).

    Dense solve up to 512 rows, Lanczos (ARPACK) above with a dense
    fallback on convergence failure.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    orient_against = np.asarray(orient_against, dtype=float)
    if n <= _DENSE_EIG_LIMIT:
        w, V = np.linalg.eigh(H)
        value, u = float(w[0]), V[:, 0]
    else:
        value, u = _lanczos_smallest(H)
    if orient_against @ u > 0.0:
        u = -u
    return EigPair(value=value, vector=u)


def _lanczos_smallest(H: Array) -> tuple[float, Array]:
    n = H.shape[0]
    # Deterministic start vector with all coordinates active.
    v0 = np.ones(n) + 0.01 * np.sin(np.arange(n))
    try:
        w, V = scipy.sparse.linalg.eigsh(H, k=1, which="SA", v0=v0, tol=1e-12)
        return float(w[0]), V[:, 0]
    except scipy.sparse.linalg.ArpackNoConvergence:
        try:
            w, V = np.linalg.eigh(H)
            return float(w[0]), V[:, 0]
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise ConvergenceFailure(f"eigensolver failed: {exc}") from exc
