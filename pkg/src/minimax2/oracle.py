"""Minimax problem interface and reduced first/second-order surrogates.

A problem ``min_x max_y f(x, y)`` that is strongly concave in ``y`` admits
a smooth primal envelope ``P(x) = max_y f(x, y)``.  At an (approximate)
inner maximizer the partial gradient ``g = grad_x f(x, y)`` estimates
``grad P(x)`` and the Schur complement

    H(x, y) = f_xx - f_xy (f_yy)^{-1} f_yx

estimates ``hess P(x)``.  This module defines the oracle bundle, assembles
``H``, and provides finite-difference validation of user derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SingularYYBlock

Array = np.ndarray


@dataclass
class MinimaxProblem:
    """Oracle bundle for f and its first/second partial derivatives.

    ``ell``, ``mu`` and ``rho`` are the gradient Lipschitz constant, the
    strong-concavity modulus in y and the Lipschitz constant of the second
    derivatives.  They are supplied by the caller; the library does not
    estimate them (``sample_concavity`` can flag violations in debug runs).
    """

    dim_x: int
    dim_y: int
    eval_f: Callable[[Array, Array], float]
    grad_x: Callable[[Array, Array], Array]
    grad_y: Callable[[Array, Array], Array]
    hess_xx: Callable[[Array, Array], Array]
    hess_xy: Callable[[Array, Array], Array]
    hess_yy: Callable[[Array, Array], Array]
    ell: float
    mu: float
    rho: float
    # Optional closed forms, set by analytic fixtures for validation.
    closed_form_P: Optional[Callable[[Array], float]] = None
    closed_form_grad_P: Optional[Callable[[Array], Array]] = None
    closed_form_hess_P: Optional[Callable[[Array], Array]] = None
    closed_form_y_star: Optional[Callable[[Array], Array]] = None
    # Optional domain interface (used by solvers to safeguard steps).
    contains: Optional[Callable[[Array], bool]] = None
    project: Optional[Callable[[Array], Array]] = None
    P_lower_bound: Optional[float] = None
    name: str = "problem"

    def __post_init__(self):
        if self.dim_x <= 0 or self.dim_y <= 0:
            raise DimensionMismatch("dim_x and dim_y must be positive")
        if not (0.0 < self.mu <= self.ell):
            raise ValueError("need 0 < mu <= ell")
        if self.rho <= 0.0:
            raise ValueError("rho must be positive")

    @property
    def kappa(self) -> float:
        return self.ell / self.mu

    def check_shapes(self, x: Array, y: Array) -> tuple[Array, Array]:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dim_x,):
            raise DimensionMismatch(f"x has shape {x.shape}, expected ({self.dim_x},)")
        if y.shape != (self.dim_y,):
            raise DimensionMismatch(f"y has shape {y.shape}, expected ({self.dim_y},)")
        return x, y


@dataclass(frozen=True)
class DerivedConstants:
    """Smoothness constants of the primal envelope derived from (ell, mu, rho)."""

    L1: float
    L_H: float
    L2: float

    @classmethod
    def from_problem(cls, problem: MinimaxProblem) -> "DerivedConstants":
        kappa = problem.kappa
        L1 = (kappa + 1.0) * problem.ell
        L_H = problem.rho * (1.0 + kappa) ** 2
        return cls(L1=L1, L_H=L_H, L2=L_H * (1.0 + kappa))


@dataclass
class OracleEval:
    """Inexact gradient/Hessian pair for P at a point, with accuracy metadata.

    ``eps1`` and ``eps2`` are the guaranteed accuracies ``|grad P - g|`` and
    ``|hess P - H|`` certified by the inner solve that produced the pair.
    """

    g: Array
    H: Array
    eps1: float
    eps2: float
    inner_iters: int

    def __post_init__(self):
        self.H = symmetrize(self.H)
        if not (np.isfinite(self.eps1) and np.isfinite(self.eps2)):
            raise ValueError("accuracy metadata must be finite")


def symmetrize(H: Array) -> Array:
    """Return (H + H^T) / 2, absorbing floating-point asymmetry."""
    H = np.asarray(H, dtype=float)
    return 0.5 * (H + H.T)


def assemble_reduced_hessian(problem: MinimaxProblem, x: Array, y: Array) -> Array:
    """Schur complement H(x, y) = f_xx - f_xy (f_yy)^{-1} f_yx at (x, y).

    Equals hess P(x) exactly when y is the inner maximizer.  The yy-block
    inverse is applied through a Cholesky solve of -f_yy (positive definite
    under strong concavity); the result is symmetrized before returning.

    Raises SingularYYBlock if -f_yy is not positive definite.
    """
    x, y = problem.check_shapes(x, y)
    Axx = symmetrize(problem.hess_xx(x, y))
    B = np.asarray(problem.hess_xy(x, y), dtype=float)
    if B.shape != (problem.dim_x, problem.dim_y):
        raise DimensionMismatch(
            f"hess_xy has shape {B.shape}, expected ({problem.dim_x}, {problem.dim_y})"
        )
    C = -symmetrize(problem.hess_yy(x, y))  # positive definite under strong concavity
    try:
        cho = scipy.linalg.cho_factor(C, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularYYBlock(f"yy-block factorization failed: {exc}") from exc
    # H = A - B (f_yy)^{-1} B^T = A + B C^{-1} B^T
    H = Axx + B @ scipy.linalg.cho_solve(cho, B.T, check_finite=False)
    return symmetrize(H)


def build_oracle_eval(
    problem: MinimaxProblem,
    x: Array,
    y: Array,
    eps1: float,
    eps2: float,
    inner_iters: int,
) -> OracleEval:
    """Bundle g = grad_x f(x, y) and H(x, y) with their certified accuracies."""
    x, y = problem.check_shapes(x, y)
    g = np.asarray(problem.grad_x(x, y), dtype=float)
    H = assemble_reduced_hessian(problem, x, y)
    return OracleEval(g=g, H=H, eps1=eps1, eps2=eps2, inner_iters=inner_iters)


@dataclass(frozen=True)
class DerivativeReport:
    """Max relative central-difference errors, one entry per derivative block."""

    grad_x: float
    grad_y: float
    hess_xx: float
    hess_xy: float
    hess_yy: float

    def max_error(self) -> float:
        return max(self.grad_x, self.grad_y, self.hess_xx, self.hess_xy, self.hess_yy)


def _rel_err(analytic: Array, reference: Array) -> float:
    analytic = np.atleast_1d(np.asarray(analytic, dtype=float))
    reference = np.atleast_1d(np.asarray(reference, dtype=float))
    scale = 1.0 + np.max(np.abs(reference))
    return float(np.max(np.abs(analytic - reference)) / scale)


def validate_derivatives(
    problem: MinimaxProblem, z: Array, step: float
) -> DerivativeReport:
    """Central-difference check of every derivative block at z = [x; y].

    Gradients are checked against ``eval_f`` and each Hessian block against
    the corresponding gradient.  Report-only: nothing is raised for large
    errors, the caller inspects the returned maxima.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    z = np.asarray(z, dtype=float)
    n, m = problem.dim_x, problem.dim_y
    if z.shape != (n + m,):
        raise DimensionMismatch(f"z has shape {z.shape}, expected ({n + m},)")
    x, y = z[:n].copy(), z[n:].copy()

    def fd_grad(f, v0, h):
        out = np.zeros(v0.size)
        for i in range(v0.size):
            vp, vm = v0.copy(), v0.copy()
            vp[i] += h
            vm[i] -= h
            out[i] = (f(vp) - f(vm)) / (2.0 * h)
        return out

    def fd_jac(gfun, v0, h, out_dim):
        cols = np.zeros((out_dim, v0.size))
        for i in range(v0.size):
            vp, vm = v0.copy(), v0.copy()
            vp[i] += h
            vm[i] -= h
            cols[:, i] = (gfun(vp) - gfun(vm)) / (2.0 * h)
        return cols

    gx_fd = fd_grad(lambda v: problem.eval_f(v, y), x, step)
    gy_fd = fd_grad(lambda v: problem.eval_f(x, v), y, step)
    hxx_fd = fd_jac(lambda v: np.asarray(problem.grad_x(v, y)), x, step, n)
    hxy_fd = fd_jac(lambda v: np.asarray(problem.grad_x(x, v)), y, step, n)
    hyy_fd = fd_jac(lambda v: np.asarray(problem.grad_y(x, v)), y, step, m)

    return DerivativeReport(
        grad_x=_rel_err(problem.grad_x(x, y), gx_fd),
        grad_y=_rel_err(problem.grad_y(x, y), gy_fd),
        hess_xx=_rel_err(problem.hess_xx(x, y), hxx_fd),
        hess_xy=_rel_err(problem.hess_xy(x, y), hxy_fd),
        hess_yy=_rel_err(problem.hess_yy(x, y), hyy_fd),
    )


def sample_concavity(
    problem: MinimaxProblem,
    rng: np.random.Generator,
    num_points: int = 20,
    scale: float = 1.0,
) -> float:
    """Sample random points and return the largest eigenvalue of
    f_yy + mu*I seen (positive values flag a strong-concavity violation)."""
    worst = -np.inf
    for _ in range(num_points):
        x = rng.standard_normal(problem.dim_x) * scale
        y = rng.standard_normal(problem.dim_y) * scale
        if problem.project is not None:
            x = problem.project(x)
        Hyy = symmetrize(problem.hess_yy(x, y))
        w = np.linalg.eigvalsh(Hyy + problem.mu * np.eye(problem.dim_y))
        worst = max(worst, float(w[-1]))
    return worst
