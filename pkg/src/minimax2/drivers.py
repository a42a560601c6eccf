"""Outer-loop solvers and stationarity certificates.

``run_grtr`` is the gradient-norm-regularized trust-region method: each
iteration refreshes the inner maximizer by gradient ascent, builds the
surrogate pair (g, H) for the primal envelope, solves the regularized
subproblem with regularizer sigma*|g|^{1/2} and radius
r*max(|g|^{1/2}, eps^{1/2}), and steps.  It stops once |g| <= eps and the
subproblem multiplier is at most sqrt(L2*eps), which certifies a
second-order stationary point of P up to constant factors.

``run_lmnegcur`` replaces the subproblem with either a negative-curvature
step along the smallest eigenvector (when lambda_min(H) is sufficiently
negative) or a Levenberg-Marquardt step damped by sqrt(L2*|g|).

``run_minimax_tr`` is the fixed-radius, unregularized special case of the
trust-region loop, and ``run_gda`` is the simultaneous gradient
descent-ascent baseline.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import inner
from .errors import NonFiniteIterate, SingularLMSystem
from .oracle import DerivedConstants, MinimaxProblem, build_oracle_eval
from .trsub import TRProblem, min_eigpair, solve_tr_cg, solve_tr_exact

Array = np.ndarray
Clock = Callable[[], float]

# Certificate constants (xi, theta/sqrt(L2)) per stopping rule.
_CERT_CONSTANTS = {
    "grtr": (97.0 / 96.0, 19.0 / 12.0),
    "lmnegcur": (37.0 / 36.0, 5.0 / 9.0),
}


@dataclass
class SolverConfig:
    """Outer-loop settings.

    ``sigma``, ``r``, ``eps1``, ``eps2`` default to the theory-driven
    values derived from (L1, L2); ``L1``/``L2`` themselves default to the
    constants derived from the problem's (ell, mu, rho) but may be
    overridden, which is standard practice when the worst-case constants
    are far too conservative for a concrete instance.
    """

    epsilon: float
    max_outer_iters: Optional[int] = None
    sigma: Optional[float] = None
    r: Optional[float] = None
    eps1: Optional[float] = None
    eps2: Optional[float] = None
    subproblem_mode: str = "exact"  # "exact" | "cg" | "cg(k)"
    seed: int = 0
    L1: Optional[float] = None
    L2: Optional[float] = None
    fixed_radius: bool = False
    accelerated_inner: bool = False
    inner_iters_cap: int = 10**6
    time_limit_s: Optional[float] = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        _parse_subproblem_mode(self.subproblem_mode)


@dataclass
class IterationRecord:
    """One applied outer step (stopping checks do not append records)."""

    t: int
    x_norm: float
    g_norm: float
    lam: Optional[float]
    lambda_min_H: Optional[float]
    step_norm: float
    step_kind: str  # trust_region | lm | negative_curvature | gradient
    P_estimate: float
    inner_iters: int
    wall_time: float
    backtracks: int = 0


@dataclass
class StationarityReport:
    """Certified bounds on |grad P(x)| and lambda_min(hess P(x)).

    ``grad_norm`` and ``min_eig`` include the slack of the measurement, so
    ``satisfied`` is conservative: it can only claim a stationary point
    that truly is one (up to the stated thresholds).
    """

    grad_norm: float
    min_eig: float
    xi_bound: float
    theta_bound: float
    satisfied: bool = field(init=False)

    def __post_init__(self):
        self.satisfied = self.grad_norm <= self.xi_bound and self.min_eig >= -self.theta_bound


@dataclass
class SolverRun:
    """Result bundle: final point, per-step trace, certificate and the full
    iterate sequence (index k of ``trace`` describes the step from
    ``iterates[k]`` to ``iterates[k+1]``)."""

    x: Array
    y: Array
    trace: list[IterationRecord]
    report: Optional[StationarityReport]
    iterates: list[Array]
    stop_reason: str  # certified | max_iters | time_limit
    inner_iters_total: int
    wall_time_s: float
    algorithm: str

    @property
    def truncated(self) -> bool:
        return self.stop_reason != "certified"

    @property
    def iterations(self) -> int:
        return len(self.trace)


def _parse_subproblem_mode(mode: str) -> tuple[str, int]:
    mode = mode.strip().lower()
    if mode == "exact":
        return "exact", 0
    if mode == "cg":
        return "cg", 10
    if mode.startswith("cg(") and mode.endswith(")"):
        k = int(mode[3:-1])
        if k < 1:
            raise ValueError("cg iteration count must be >= 1")
        return "cg", k
    raise ValueError(f"unknown subproblem mode {mode!r}")


@dataclass(frozen=True)
class _Resolved:
    L1: float
    L2: float
    L_H: float
    sigma: float
    r: float
    eps1: float
    eps2: float
    eta_y: float
    A: float
    mode: str
    cg_iters: int


def _resolve(problem: MinimaxProblem, cfg: SolverConfig, algo: str) -> _Resolved:
    derived = DerivedConstants.from_problem(problem)
    L1 = cfg.L1 if cfg.L1 is not None else derived.L1
    L2 = cfg.L2 if cfg.L2 is not None else derived.L2
    sqrt_L2 = math.sqrt(L2)
    eps = cfg.epsilon
    if algo == "lmnegcur":
        eps1 = min(1.0 / 36.0, sqrt_L2 / (12.0 * L1)) * eps**1.5
        eps2 = (sqrt_L2 / 18.0) * math.sqrt(eps)
    else:
        eps1 = min(1.0 / 96.0, sqrt_L2 / (16.0 * L1)) * eps**1.5
        eps2 = (sqrt_L2 / 12.0) * math.sqrt(eps)
    if cfg.eps1 is not None:
        eps1 = cfg.eps1
    if cfg.eps2 is not None:
        eps2 = cfg.eps2
    sigma = cfg.sigma if cfg.sigma is not None else sqrt_L2 / 2.0
    r = cfg.r if cfg.r is not None else 1.0 / (4.0 * sqrt_L2)
    if algo == "grtr" and (sigma < 0 or r <= 0):
        raise ValueError("sigma >= 0 and r > 0 required")
    eta = 1.0 / problem.ell if cfg.accelerated_inner else 2.0 / (problem.ell + problem.mu)
    # Distance to y*(x) that certifies (eps1, eps2); L_H transfers Hessian error.
    A = min(eps1 / problem.ell, eps2 / derived.L_H)
    mode, cg_iters = _parse_subproblem_mode(cfg.subproblem_mode)
    return _Resolved(
        L1=L1, L2=L2, L_H=derived.L_H, sigma=sigma, r=r, eps1=eps1, eps2=eps2,
        eta_y=eta, A=A, mode=mode, cg_iters=cg_iters,
    )


def _default_max_outer(
    cfg: SolverConfig, L2: float, P0: float, P_lb: Optional[float]
) -> int:
    if cfg.max_outer_iters is not None:
        return cfg.max_outer_iters
    if P_lb is not None:
        gap = max(P0 - P_lb, 0.0)
        return max(1, math.ceil(10.0 * 128.0 * math.sqrt(L2) * gap * cfg.epsilon**-1.5))
    return 10**5


def _inner_solve(
    problem: MinimaxProblem,
    x: Array,
    y_prev: Array,
    res: _Resolved,
    cfg: SolverConfig,
    t: int,
    s_prev_norm: float,
) -> inner.InnerResult:
    kappa = max(problem.kappa, 1.0)
    if t <= 1:
        # The initial distance to y*(x) is unobservable; the gradient
        # residual over mu upper-bounds it.
        res0 = float(np.linalg.norm(problem.grad_y(x, y_prev)))
        budget = inner.schedule_N(1, kappa, res.A, 0.0, res0 / problem.mu)
    else:
        budget = inner.schedule_N(t, kappa, res.A, s_prev_norm, 0.0)
    icfg = inner.InnerConfig(
        eta_y=res.eta_y,
        target_eps1=res.eps1,
        target_eps2=res.eps2,
        max_iters=min(max(budget, 1), cfg.inner_iters_cap),
        accelerated=cfg.accelerated_inner,
    )
    return inner.ascend(problem, x, y_prev, icfg)


def _apply_step(problem: MinimaxProblem, x: Array, s: Array) -> tuple[Array, int]:
    """Step with bisection backtracking when the candidate leaves the domain."""
    backtracks = 0
    if problem.contains is not None:
        while backtracks < 30 and not problem.contains(x + s):
            s = 0.5 * s
            backtracks += 1
    x_new = x + s
    if problem.project is not None:
        x_new = problem.project(x_new)
    return x_new, backtracks


def run_grtr(
    problem: MinimaxProblem,
    x0: Array,
    y0: Array,
    cfg: SolverConfig,
    clock: Clock = time.monotonic,
) -> SolverRun:
    """Gradient-norm-regularized trust-region loop (see module docstring)."""
    return _tr_loop(problem, x0, y0, cfg, clock, algorithm="grtr")


def run_minimax_tr(
    problem: MinimaxProblem,
    x0: Array,
    y0: Array,
    cfg: SolverConfig,
    clock: Clock = time.monotonic,
) -> SolverRun:
    """Fixed-radius unregularized variant: sigma = 0 and radius pinned to
    r*sqrt(eps) at every iteration; otherwise identical to run_grtr."""
    forced = replace(cfg, sigma=0.0, fixed_radius=True)
    run = _tr_loop(problem, x0, y0, forced, clock, algorithm="minimax_tr")
    return run


def _tr_loop(
    problem: MinimaxProblem,
    x0: Array,
    y0: Array,
    cfg: SolverConfig,
    clock: Clock,
    algorithm: str,
) -> SolverRun:
    res = _resolve(problem, cfg, "grtr")
    sqrt_l2eps = math.sqrt(res.L2 * cfg.epsilon)
    x, y = problem.check_shapes(x0, y0)
    x, y = x.copy(), y.copy()
    t0 = clock()
    trace: list[IterationRecord] = []
    iterates = [x.copy()]
    inner_total = 0
    s_prev_norm = 0.0
    max_outer: Optional[int] = cfg.max_outer_iters
    stop_reason = "max_iters"

    t = 0
    while True:
        t += 1
        if max_outer is not None and t > max_outer:
            break
        if cfg.time_limit_s is not None and clock() - t0 > cfg.time_limit_s:
            stop_reason = "time_limit"
            break
        ires = _inner_solve(problem, x, y, res, cfg, t, s_prev_norm)
        y = ires.y
        inner_total += ires.iters
        ev = build_oracle_eval(problem, x, y, res.eps1, res.eps2, ires.iters)
        gnorm = float(np.linalg.norm(ev.g))
        if not np.isfinite(gnorm):
            raise NonFiniteIterate("gradient surrogate is not finite")
        if max_outer is None:
            P0 = problem.eval_f(x, y)
            max_outer = _default_max_outer(cfg, res.L2, P0, problem.P_lower_bound)

        reg = res.sigma * math.sqrt(gnorm)
        if cfg.fixed_radius:
            radius = res.r * math.sqrt(cfg.epsilon)
        else:
            radius = res.r * max(math.sqrt(gnorm), math.sqrt(cfg.epsilon))
        sub = TRProblem(H=ev.H, g=ev.g, reg=reg, radius=radius)
        if res.mode == "exact":
            sol = solve_tr_exact(sub, tol=1e-10)
            lam_rec: Optional[float] = sol.lam
            lam_min_rec: Optional[float] = None
            if gnorm <= cfg.epsilon and sol.lam <= sqrt_l2eps:
                stop_reason = "certified"
                break
        else:
            sol = solve_tr_cg(sub, max_iters=res.cg_iters)
            lam_rec = None
            lam_min_rec = None
            if gnorm <= cfg.epsilon:
                # No multiplier in CG mode: certify curvature directly.
                pair = min_eigpair(ev.H, ev.g)
                lam_min_rec = pair.value
                if pair.value >= -0.5 * sqrt_l2eps:
                    stop_reason = "certified"
                    break

        x_next, backtracks = _apply_step(problem, x, sol.s)
        step_norm = float(np.linalg.norm(x_next - x))
        trace.append(
            IterationRecord(
                t=t,
                x_norm=float(np.linalg.norm(x)),
                g_norm=gnorm,
                lam=lam_rec,
                lambda_min_H=lam_min_rec,
                step_norm=step_norm,
                step_kind="trust_region",
                P_estimate=problem.eval_f(x, y),
                inner_iters=ires.iters,
                wall_time=clock() - t0,
                backtracks=backtracks,
            )
        )
        x = x_next
        iterates.append(x.copy())
        s_prev_norm = step_norm

    report, cert_iters = _final_report(
        problem, x, cfg, res, variant="grtr", y0=y
    )
    inner_total += cert_iters
    return SolverRun(
        x=x,
        y=y,
        trace=trace,
        report=report,
        iterates=iterates,
        stop_reason=stop_reason,
        inner_iters_total=inner_total,
        wall_time_s=clock() - t0,
        algorithm=algorithm,
    )


def run_lmnegcur(
    problem: MinimaxProblem,
    x0: Array,
    y0: Array,
    cfg: SolverConfig,
    clock: Clock = time.monotonic,
) -> SolverRun:
    """Levenberg-Marquardt loop with negative-curvature correction."""
    res = _resolve(problem, cfg, "lmnegcur")
    eps = cfg.epsilon
    x, y = problem.check_shapes(x0, y0)
    x, y = x.copy(), y.copy()
    t0 = clock()
    trace: list[IterationRecord] = []
    iterates = [x.copy()]
    inner_total = 0
    s_prev_norm = 0.0
    max_outer: Optional[int] = cfg.max_outer_iters
    stop_reason = "max_iters"

    t = 0
    while True:
        t += 1
        if max_outer is not None and t > max_outer:
            break
        if cfg.time_limit_s is not None and clock() - t0 > cfg.time_limit_s:
            stop_reason = "time_limit"
            break
        ires = _inner_solve(problem, x, y, res, cfg, t, s_prev_norm)
        y = ires.y
        inner_total += ires.iters
        ev = build_oracle_eval(problem, x, y, res.eps1, res.eps2, ires.iters)
        gnorm = float(np.linalg.norm(ev.g))
        if not np.isfinite(gnorm):
            raise NonFiniteIterate("gradient surrogate is not finite")
        if max_outer is None:
            P0 = problem.eval_f(x, y)
            max_outer = _default_max_outer(cfg, res.L2, P0, problem.P_lower_bound)

        pair = min_eigpair(ev.H, ev.g)
        scale = max(gnorm, eps)
        if pair.value <= -0.5 * math.sqrt(res.L2 * scale):
            s = math.sqrt(scale / res.L2) * pair.vector
            kind = "negative_curvature"
        elif gnorm >= eps:
            shift = math.sqrt(res.L2 * gnorm)
            try:
                cho = scipy.linalg.cho_factor(
                    ev.H + shift * np.eye(problem.dim_x), lower=True, check_finite=False
                )
            except scipy.linalg.LinAlgError as exc:
                raise SingularLMSystem(
                    "shifted system not positive definite; the curvature branch "
                    "should have caught this"
                ) from exc
            s = -scipy.linalg.cho_solve(cho, ev.g, check_finite=False)
            kind = "lm"
        else:
            stop_reason = "certified"
            break

        x_next, backtracks = _apply_step(problem, x, s)
        step_norm = float(np.linalg.norm(x_next - x))
        trace.append(
            IterationRecord(
                t=t,
                x_norm=float(np.linalg.norm(x)),
                g_norm=gnorm,
                lam=None,
                lambda_min_H=pair.value,
                step_norm=step_norm,
                step_kind=kind,
                P_estimate=problem.eval_f(x, y),
                inner_iters=ires.iters,
                wall_time=clock() - t0,
                backtracks=backtracks,
            )
        )
        x = x_next
        iterates.append(x.copy())
        s_prev_norm = step_norm

    report, cert_iters = _final_report(
        problem, x, cfg, res, variant="lmnegcur", y0=y
    )
    inner_total += cert_iters
    return SolverRun(
        x=x,
        y=y,
        trace=trace,
        report=report,
        iterates=iterates,
        stop_reason=stop_reason,
        inner_iters_total=inner_total,
        wall_time_s=clock() - t0,
        algorithm="lmnegcur",
    )


def run_gda(
    problem: MinimaxProblem,
    x0: Array,
    y0: Array,
    step_x: float = 0.01,
    step_y: float = 0.01,
    max_iters: int = 10**5,
    clock: Clock = time.monotonic,
    time_limit_s: Optional[float] = None,
) -> SolverRun:
    """Simultaneous gradient descent-ascent baseline (no certificate)."""
    if step_x < 0 or step_y < 0 or max_iters < 0:
        raise ValueError("step sizes and max_iters must be nonnegative")
    x, y = problem.check_shapes(x0, y0)
    x, y = x.copy(), y.copy()
    t0 = clock()
    trace: list[IterationRecord] = []
    iterates = [x.copy()]
    stop_reason = "max_iters"
    for t in range(1, max_iters + 1):
        if time_limit_s is not None and clock() - t0 > time_limit_s:
            stop_reason = "time_limit"
            break
        gx = np.asarray(problem.grad_x(x, y), dtype=float)
        gy = np.asarray(problem.grad_y(x, y), dtype=float)
        if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
            raise NonFiniteIterate("gradient is not finite")
        x_next, backtracks = _apply_step(problem, x, -step_x * gx)
        trace.append(
            IterationRecord(
                t=t,
                x_norm=float(np.linalg.norm(x)),
                g_norm=float(np.linalg.norm(gx)),
                lam=None,
                lambda_min_H=None,
                step_norm=float(np.linalg.norm(x_next - x)),
                step_kind="gradient",
                P_estimate=problem.eval_f(x, y),
                inner_iters=1,
                wall_time=clock() - t0,
                backtracks=backtracks,
            )
        )
        x = x_next
        y = y + step_y * gy
        iterates.append(x.copy())
    return SolverRun(
        x=x,
        y=y,
        trace=trace,
        report=None,
        iterates=iterates,
        stop_reason=stop_reason,
        inner_iters_total=len(trace),
        wall_time_s=clock() - t0,
        algorithm="gda",
    )


def certify(
    problem: MinimaxProblem,
    x: Array,
    epsilon: float,
    inner_tol: float = 1e-2,
    constants: str = "grtr",
    L1: Optional[float] = None,
    L2: Optional[float] = None,
    y0: Optional[Array] = None,
) -> StationarityReport:
    """High-accuracy stationarity certificate at x.

    Runs the inner ascent until the residual certifies a fraction
    ``inner_tol`` of the target thresholds, then reports
    |g| + slack and lambda_min(H) - slack against the thresholds
    (xi*eps, theta*sqrt(eps)) of the requested stopping rule.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0 < inner_tol <= 1e-2:
        raise ValueError("inner_tol must be in (0, 1e-2]")
    if constants not in _CERT_CONSTANTS:
        raise ValueError(f"unknown constants family {constants!r}")
    derived = DerivedConstants.from_problem(problem)
    L2 = L2 if L2 is not None else derived.L2
    report, _ = _certify_impl(problem, x, epsilon, inner_tol, constants, L2, derived.L_H, y0)
    return report


def _certify_impl(
    problem: MinimaxProblem,
    x: Array,
    epsilon: float,
    inner_tol: float,
    constants: str,
    L2: float,
    L_H: float,
    y0: Optional[Array],
) -> tuple[StationarityReport, int]:
    x = np.asarray(x, dtype=float)
    if y0 is None:
        y0 = np.zeros(problem.dim_y)
    theta_scale = math.sqrt(L2 * epsilon)
    # Distance target making both measurement slacks an inner_tol fraction
    # of their thresholds.
    A_cert = inner_tol * min(epsilon / problem.ell, theta_scale / L_H)
    result = _high_accuracy_ascent(problem, x, y0, A_cert)
    g = np.asarray(problem.grad_x(x, result.y), dtype=float)
    H = build_oracle_eval(problem, x, result.y, 1.0, 1.0, result.iters).H
    pair = min_eigpair(H, g)
    dist_bound = result.residual / problem.mu
    slack_g = problem.ell * dist_bound
    slack_H = L_H * dist_bound
    xi, theta_factor = _CERT_CONSTANTS[constants]
    report = StationarityReport(
        grad_norm=float(np.linalg.norm(g)) + slack_g,
        min_eig=pair.value - slack_H,
        xi_bound=xi * epsilon,
        theta_bound=theta_factor * theta_scale,
    )
    return report, result.iters


def _high_accuracy_ascent(
    problem: MinimaxProblem, x: Array, y0: Array, dist_target: float
) -> inner.InnerResult:
    kappa = max(problem.kappa, 1.0)
    res0 = float(np.linalg.norm(problem.grad_y(x, y0)))
    d0 = max(res0 / problem.mu, dist_target)
    # Residual stop at mu*dist needs distance dist/kappa: budget with margin.
    budget = math.ceil(kappa * (math.log(d0 / dist_target + 1.0) + math.log(kappa) + 2.0)) + 50
    icfg = inner.InnerConfig(
        eta_y=2.0 / (problem.ell + problem.mu),
        target_eps1=1.0,
        target_eps2=1.0,
        max_iters=min(budget, 10**6),
        residual_tol=problem.mu * dist_target,
    )
    return inner.ascend(problem, x, y0, icfg)


def _final_report(
    problem: MinimaxProblem,
    x: Array,
    cfg: SolverConfig,
    res: _Resolved,
    variant: str,
    y0: Array,
) -> tuple[StationarityReport, int]:
    return _certify_impl(
        problem, x, cfg.epsilon, 1e-2, variant, res.L2, res.L_H, y0
    )


def evaluate_primal(
    problem: MinimaxProblem,
    x: Array,
    accuracy: float = 1e-10,
    y0: Optional[Array] = None,
) -> float:
    """P(x) by a high-accuracy inner solve: returns f(x, y) with
    P(x) - f(x, y) <= accuracy (f never overshoots P)."""
    x = np.asarray(x, dtype=float)
    if y0 is None:
        y0 = np.zeros(problem.dim_y)
    # P - f <= (ell/2) dist^2.
    dist_target = math.sqrt(2.0 * accuracy / problem.ell)
    result = _high_accuracy_ascent(problem, x, y0, dist_target)
    return float(problem.eval_f(x, result.y))
