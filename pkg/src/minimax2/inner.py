"""Inner maximization of f(x, .) by gradient ascent.

Strong concavity turns the unobservable distance to the maximizer into an
observable certificate: ``|y - y*(x)| <= |grad_y f(x, y)| / mu``.  The loop
therefore stops on the gradient residual, while the iteration budget
``schedule_N`` derived from the worst-case linear rate serves as a cap that
preserves the same accuracy guarantee when the residual test never fires.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidAccuracy, NonFiniteIterate
from .oracle import DerivedConstants, MinimaxProblem

Array = np.ndarray


@dataclass
class InnerConfig:
    """Settings for one inner ascent.

    ``target_eps1``/``target_eps2`` are the gradient/Hessian accuracies the
    resulting oracle pair must certify; they induce the distance target
    A = min(eps1/ell, eps2/L_H) and the residual stop ``mu * A``.
    ``residual_tol``, when set, overrides the derived residual stop (used by
    high-accuracy certification solves).
    """

    eta_y: float
    target_eps1: float
    target_eps2: float
    max_iters: int
    accelerated: bool = False
    residual_tol: Optional[float] = None

    def __post_init__(self):
        if self.eta_y <= 0:
            raise ValueError("eta_y must be positive")
        if self.target_eps1 <= 0 or self.target_eps2 <= 0:
            raise InvalidAccuracy("target accuracies must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.residual_tol is not None and self.residual_tol <= 0:
            raise InvalidAccuracy("residual_tol must be positive")


@dataclass
class InnerResult:
    y: Array
    iters: int
    residual: float
    truncated: bool = False


def distance_target(problem: MinimaxProblem, eps1: float, eps2: float) -> float:
    """A = min(eps1/ell, eps2/L_H): distance to y*(x) that certifies the
    requested gradient and Hessian accuracies for P."""
    consts = DerivedConstants.from_problem(problem)
    return min(eps1 / problem.ell, eps2 / consts.L_H)


def default_config(
    problem: MinimaxProblem,
    eps1: float,
    eps2: float,
    max_iters: int,
    accelerated: bool = False,
) -> InnerConfig:
    eta = 1.0 / problem.ell if accelerated else 2.0 / (problem.ell + problem.mu)
    return InnerConfig(
        eta_y=eta,
        target_eps1=eps1,
        target_eps2=eps2,
        max_iters=max_iters,
        accelerated=accelerated,
    )


def schedule_N(
    t: int, kappa: float, A: float, s_prev_norm: float, y0_dist: float
) -> int:
    """Iteration budget making the inner error at most A, by the linear rate.

    For the first outer iteration the budget is ceil(kappa * log(D0 / A))
    with D0 the initial distance; afterwards the warm start is within
    A + kappa * |s_{t-1}| of the new maximizer, giving
    ceil(kappa * log((A + kappa * |s_{t-1}|) / A)).  Natural log; always
    at least 1.
    """
    if A <= 0:
        raise InvalidAccuracy("A must be positive")
    if kappa < 1 or s_prev_norm < 0 or y0_dist < 0:
        raise ValueError("kappa >= 1 and norms >= 0 required")
    if t <= 1:
        ratio = y0_dist / A
    else:
        ratio = (A + kappa * s_prev_norm) / A
    if ratio <= 1.0:
        return 1
    return max(1, math.ceil(kappa * math.log(ratio)))


def ascend(
    problem: MinimaxProblem, x: Array, y0: Array, cfg: InnerConfig
) -> InnerResult:
    """Gradient ascent on f(x, .) until the residual certifies the target
    accuracy, or cfg.max_iters steps (then ``truncated`` is set).

    The accelerated variant uses constant Nesterov momentum
    (sqrt(kappa)-1)/(sqrt(kappa)+1) around the same gradient step.
    """
    x, y = problem.check_shapes(x, y0)
    if not np.all(np.isfinite(y)):
        raise NonFiniteIterate("y0 is not finite")
    A = distance_target(problem, cfg.target_eps1, cfg.target_eps2)
    tol = cfg.residual_tol if cfg.residual_tol is not None else problem.mu * A

    grad = np.asarray(problem.grad_y(x, y), dtype=float)
    _check_finite(grad)
    res = float(np.linalg.norm(grad))
    if res <= tol:
        return InnerResult(y=y, iters=0, residual=res)

    if not cfg.accelerated:
        for k in range(1, cfg.max_iters + 1):
            y = y + cfg.eta_y * grad
            grad = np.asarray(problem.grad_y(x, y), dtype=float)
            _check_finite(grad)
            res = float(np.linalg.norm(grad))
            if res <= tol:
                return InnerResult(y=y, iters=k, residual=res)
        return InnerResult(y=y, iters=cfg.max_iters, residual=res, truncated=True)

    sqrt_kappa = math.sqrt(problem.kappa)
    beta = (sqrt_kappa - 1.0) / (sqrt_kappa + 1.0)
    v = y.copy()
    for k in range(1, cfg.max_iters + 1):
        grad_v = np.asarray(problem.grad_y(x, v), dtype=float)
        _check_finite(grad_v)
        y_next = v + cfg.eta_y * grad_v
        v = y_next + beta * (y_next - y)
        y = y_next
        grad = np.asarray(problem.grad_y(x, y), dtype=float)
        _check_finite(grad)
        res = float(np.linalg.norm(grad))
        if res <= tol:
            return InnerResult(y=y, iters=k, residual=res)
    return InnerResult(y=y, iters=cfg.max_iters, residual=res, truncated=True)


def _check_finite(grad: Array) -> None:
    if not np.all(np.isfinite(grad)):
        raise NonFiniteIterate("gradient is not finite")
