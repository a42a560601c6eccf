"""Benchmark problem instances.

Two families:

* ``saddle_chain_problem``: a piecewise-polynomial minimax landscape on a
  box domain whose primal envelope has a chain of n saddle points at
  (4*tau, ..., 4*tau, 0, ..., 0) and a single local optimum at
  (4*tau, ..., 4*tau).  The y part is a decoupled -|y|^2/2, so the inner
  maximizer is y = 0 and P(x) equals the piecewise function g(x).
* ``quadratic_problem``: analytic bilinear-coupled quadratics with closed
  forms for y*(x), P, grad P and hess P, used to validate the oracles.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ConfigError, NotPositiveDefinite, OutsideDomain
from .oracle import MinimaxProblem, symmetrize

Array = np.ndarray


@dataclass(frozen=True)
class SaddleChainParams:
    n: int
    m: int
    L: float
    gamma: float
    tau: float = math.e

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if self.L <= 0 or self.gamma <= 0 or self.tau <= 0:
            raise ValueError("L, gamma, tau must be positive")

    @property
    def nu(self) -> float:
        return -h1(2.0 * self.tau, self) + 4.0 * self.L * self.tau**2

    @property
    def optimum(self) -> Array:
        return np.full(self.n, 4.0 * self.tau)

    @property
    def P_star(self) -> float:
        return -self.n * self.nu


@dataclass(frozen=True)
class RegionLabel:
    kind: str  # type1 | type2 | final | outside
    i: int = 0  # 1-based block index for type1/type2

    def __post_init__(self):
        if self.kind not in ("type1", "type2", "final", "outside"):
            raise ValueError(f"unknown region kind {self.kind!r}")


# Cubic/quartic glue h1 and quintic glue h2 and their derivatives.  h1
# matches -gamma*x^2 to first order at x = tau and h2 interpolates between
# L at x = tau and -gamma at x = 2*tau with two flat derivatives at each end.


def _h1_coeffs(p: SaddleChainParams) -> tuple[float, float]:
    a = (-14.0 * p.L + 10.0 * p.gamma) / (3.0 * p.tau)
    b = (5.0 * p.L - 3.0 * p.gamma) / (2.0 * p.tau**2)
    return a, b


def h1(x: float, p: SaddleChainParams) -> float:
    a, b = _h1_coeffs(p)
    u = x - p.tau
    return -p.gamma * x**2 + a * u**3 + b * u**4


def h1_d1(x: float, p: SaddleChainParams) -> float:
    a, b = _h1_coeffs(p)
    u = x - p.tau
    return -2.0 * p.gamma * x + 3.0 * a * u**2 + 4.0 * b * u**3


def h1_d2(x: float, p: SaddleChainParams) -> float:
    a, b = _h1_coeffs(p)
    u = x - p.tau
    return -2.0 * p.gamma + 6.0 * a * u + 12.0 * b * u**2


def h1_d3(x: float, p: SaddleChainParams) -> float:
    a, b = _h1_coeffs(p)
    return 6.0 * a + 24.0 * b * (x - p.tau)


def _h2_coeffs(p: SaddleChainParams) -> tuple[float, float, float]:
    s = p.L + p.gamma
    return (-10.0 * s / p.tau**3, -15.0 * s / p.tau**4, -6.0 * s / p.tau**5)


def h2(x: float, p: SaddleChainParams) -> float:
    c, d, e = _h2_coeffs(p)
    w = x - 2.0 * p.tau
    return -p.gamma + c * w**3 + d * w**4 + e * w**5


def h2_d1(x: float, p: SaddleChainParams) -> float:
    c, d, e = _h2_coeffs(p)
    w = x - 2.0 * p.tau
    return 3.0 * c * w**2 + 4.0 * d * w**3 + 5.0 * e * w**4


def h2_d2(x: float, p: SaddleChainParams) -> float:
    c, d, e = _h2_coeffs(p)
    w = x - 2.0 * p.tau
    return 6.0 * c * w + 12.0 * d * w**2 + 20.0 * e * w**3


def h2_d3(x: float, p: SaddleChainParams) -> float:
    c, d, e = _h2_coeffs(p)
    w = x - 2.0 * p.tau
    return 6.0 * c + 24.0 * d * w + 60.0 * e * w**2


def classify_region(x: Array, params: SaddleChainParams) -> RegionLabel:
    """Locate x within the piecewise domain.

    The leading block is the maximal prefix of coordinates in
    [2*tau, 6*tau] (so x_i = 2*tau belongs to the successor region); the
    next coordinate selects type1 on [0, tau) or type2 on [tau, 2*tau)
    (so x_i = tau belongs to type2); all remaining coordinates must lie
    in [0, tau].  Anything else is outside.
    """
    x = np.asarray(x, dtype=float)
    n = params.n
    tau = params.tau
    if x.shape != (n,):
        raise ValueError(f"x has shape {x.shape}, expected ({n},)")
    i = 0
    while i < n and 2.0 * tau <= x[i] <= 6.0 * tau:
        i += 1
    if i == n:
        return RegionLabel("final")
    xi = x[i]
    if not (0.0 <= xi < 2.0 * tau):
        return RegionLabel("outside")
    if np.any(x[i + 1 :] < 0.0) or np.any(x[i + 1 :] > tau):
        return RegionLabel("outside")
    kind = "type1" if xi < tau else "type2"
    return RegionLabel(kind, i + 1)


def _project_box(x: Array, params: SaddleChainParams) -> Array:
    return np.clip(x, 0.0, 6.0 * params.tau)


def _resolve_region(
    x: Array, params: SaddleChainParams, region: Optional[RegionLabel]
) -> tuple[Array, RegionLabel]:
    x = np.asarray(x, dtype=float)
    if region is None:
        x = _project_box(x, params)
        region = classify_region(x, params)
    if region.kind == "outside":
        raise OutsideDomain(f"point {x} lies outside the piecewise domain")
    return x, region


def saddle_chain_value(
    x: Array, params: SaddleChainParams, region: Optional[RegionLabel] = None
) -> float:
    """g(x) through the closed form of the region containing x.

    Pass ``region`` to force a specific adjoining region's formula (used to
    test continuity across boundaries).  Without it, x is first projected
    coordinate-wise onto the bounding box to absorb floating-point drift.
    """
    x, region = _resolve_region(x, params, region)
    L, gamma, tau, nu = params.L, params.gamma, params.tau, params.nu
    n = params.n
    if region.kind == "final":
        return float(L * np.sum((x - 4.0 * tau) ** 2) - n * nu)
    k = region.i - 1  # 0-based index of the active coordinate
    lead = L * np.sum((x[:k] - 4.0 * tau) ** 2)
    if region.kind == "type1":
        trail = L * np.sum(x[k + 1 :] ** 2)
        return float(lead - gamma * x[k] ** 2 + trail - k * nu)
    # type2
    val = lead + h1(x[k], params) - k * nu
    if k + 1 < n:
        val += h2(x[k], params) * x[k + 1] ** 2 + L * np.sum(x[k + 2 :] ** 2)
    return float(val)


def saddle_chain_grad(
    x: Array, params: SaddleChainParams, region: Optional[RegionLabel] = None
) -> Array:
    x, region = _resolve_region(x, params, region)
    L, gamma, tau = params.L, params.gamma, params.tau
    n = params.n
    grad = np.zeros(n)
    if region.kind == "final":
        return 2.0 * L * (x - 4.0 * tau)
    k = region.i - 1
    grad[:k] = 2.0 * L * (x[:k] - 4.0 * tau)
    if region.kind == "type1":
        grad[k] = -2.0 * gamma * x[k]
        grad[k + 1 :] = 2.0 * L * x[k + 1 :]
        return grad
    grad[k] = h1_d1(x[k], params)
    if k + 1 < n:
        grad[k] += h2_d1(x[k], params) * x[k + 1] ** 2
        grad[k + 1] = 2.0 * h2(x[k], params) * x[k + 1]
        grad[k + 2 :] = 2.0 * L * x[k + 2 :]
    return grad


def saddle_chain_hess(
    x: Array, params: SaddleChainParams, region: Optional[RegionLabel] = None
) -> Array:
    x, region = _resolve_region(x, params, region)
    L, gamma = params.L, params.gamma
    n = params.n
    H = np.zeros((n, n))
    if region.kind == "final":
        np.fill_diagonal(H, 2.0 * L)
        return H
    k = region.i - 1
    diag = np.full(n, 2.0 * L)
    if region.kind == "type1":
        diag[k] = -2.0 * gamma
        H[np.diag_indices(n)] = diag
        return H
    diag[k] = h1_d2(x[k], params)
    if k + 1 < n:
        diag[k] += h2_d2(x[k], params) * x[k + 1] ** 2
        diag[k + 1] = 2.0 * h2(x[k], params)
        H[k, k + 1] = H[k + 1, k] = 2.0 * h2_d1(x[k], params) * x[k + 1]
    H[np.diag_indices(n)] = diag
    return H


def stationary_points(params: SaddleChainParams) -> list[Array]:
    """The n saddle points (4*tau, ..., 4*tau, 0, ..., 0) followed by the
    local optimum (4*tau, ..., 4*tau)."""
    pts = []
    for i in range(params.n):
        x = np.zeros(params.n)
        x[:i] = 4.0 * params.tau
        pts.append(x)
    pts.append(params.optimum.copy())
    return pts


@lru_cache(maxsize=32)
def estimate_smoothness_constants(
    params: SaddleChainParams, grid: int = 121
) -> tuple[float, float]:
    """Numerical bounds (ell, rho) over the domain.

    Only the glued 2x2 block (the active coordinate and its successor)
    carries non-quadratic terms, so the Hessian norm and the third
    derivative tensor norm are maximized on a grid over that block's
    rectangle [tau, 2*tau] x [0, tau]; the quadratic regions contribute
    the constants 2L and 2*gamma.  The y part adds a -I block.
    """
    tau = params.tau
    u = np.linspace(tau, 2.0 * tau, grid)
    v = np.linspace(0.0, tau, grid)
    U, V = np.meshgrid(u, v, indexing="ij")

    h1dd = np.vectorize(lambda t: h1_d2(t, params))(u)[:, None]
    h2v = np.vectorize(lambda t: h2(t, params))(u)[:, None]
    h2d = np.vectorize(lambda t: h2_d1(t, params))(u)[:, None]
    h2dd = np.vectorize(lambda t: h2_d2(t, params))(u)[:, None]
    h1ddd = np.vectorize(lambda t: h1_d3(t, params))(u)[:, None]
    h2ddd = np.vectorize(lambda t: h2_d3(t, params))(u)[:, None]

    # Hessian 2x2 block spectral norm on the grid.
    a = h1dd + h2dd * V**2
    b = 2.0 * h2d * V
    c = 2.0 * h2v * np.ones_like(V)
    half_tr = 0.5 * (a + c)
    disc = np.sqrt(0.25 * (a - c) ** 2 + b**2)
    block_norm = np.maximum(np.abs(half_tr + disc), np.abs(half_tr - disc))
    ell_x = max(
        2.0 * params.L, 2.0 * params.gamma, float(np.max(block_norm))
    )
    ell = max(ell_x, 1.0)  # the y block contributes -I

    # Third-derivative tensor operator norm on the same block:
    # max over unit (w1, w2) of |T[w,w,w]|.
    t_uuu = h1ddd + h2ddd * V**2
    t_uuv = 2.0 * h2dd * V
    t_uvv = 2.0 * h2d * np.ones_like(V)
    theta = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
    cw, sw = np.cos(theta), np.sin(theta)
    cubic = (
        t_uuu[..., None] * cw**3
        + 3.0 * t_uuv[..., None] * cw**2 * sw
        + 3.0 * t_uvv[..., None] * cw * sw**2
    )
    rho = float(np.max(np.abs(cubic)))
    return ell, max(rho, 1e-12)


def saddle_chain_problem(
    params: SaddleChainParams,
    ell: Optional[float] = None,
    rho: Optional[float] = None,
) -> MinimaxProblem:
    """Full minimax oracle f(x, y) = g(x) - |y|^2 / 2.

    The coupling block is zero, so y*(x) = 0, P(x) = g(x) and the reduced
    Hessian equals hess g(x) at every y.  When not supplied, ell and rho
    are bounded numerically over the domain.
    """
    if ell is None or rho is None:
        est_ell, est_rho = estimate_smoothness_constants(params)
        ell = est_ell if ell is None else ell
        rho = est_rho if rho is None else rho
    n, m = params.n, params.m
    zeros_xy = np.zeros((n, m))
    minus_eye = -np.eye(m)

    return MinimaxProblem(
        dim_x=n,
        dim_y=m,
        eval_f=lambda x, y: saddle_chain_value(x, params) - 0.5 * float(y @ y),
        grad_x=lambda x, y: saddle_chain_grad(x, params),
        grad_y=lambda x, y: -np.asarray(y, dtype=float),
        hess_xx=lambda x, y: saddle_chain_hess(x, params),
        hess_xy=lambda x, y: zeros_xy,
        hess_yy=lambda x, y: minus_eye,
        ell=ell,
        mu=1.0,
        rho=rho,
        closed_form_P=lambda x: saddle_chain_value(x, params),
        closed_form_grad_P=lambda x: saddle_chain_grad(x, params),
        closed_form_hess_P=lambda x: saddle_chain_hess(x, params),
        closed_form_y_star=lambda x: np.zeros(m),
        contains=lambda x: classify_region(np.asarray(x, float), params).kind
        != "outside",
        project=lambda x: _project_box(np.asarray(x, float), params),
        P_lower_bound=params.P_star,
        name=f"saddle_chain(n={n},m={m},L={params.L},gamma={params.gamma})",
    )


def save_instance(path: str | Path, params: SaddleChainParams, ell: float, rho: float) -> None:
    """Persist an instance as key-value text for reproducibility."""
    cp = configparser.ConfigParser()
    cp["problem"] = {
        "kind": "saddle_chain",
        "n": str(params.n),
        "m": str(params.m),
        "L": repr(params.L),
        "gamma": repr(params.gamma),
        "tau": repr(params.tau),
        "nu": repr(params.nu),
        "ell": repr(ell),
        "rho": repr(rho),
    }
    with open(path, "w") as fh:
        cp.write(fh)


def load_instance(path: str | Path) -> tuple[MinimaxProblem, SaddleChainParams]:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read instance file {path}")
    try:
        sec = cp["problem"]
        if sec.get("kind", "saddle_chain") != "saddle_chain":
            raise ConfigError(f"unsupported instance kind {sec.get('kind')!r}")
        params = SaddleChainParams(
            n=sec.getint("n"),
            m=sec.getint("m"),
            L=sec.getfloat("L"),
            gamma=sec.getfloat("gamma"),
            tau=sec.getfloat("tau", math.e),
        )
        ell = sec.getfloat("ell")
        rho = sec.getfloat("rho")
        nu = sec.getfloat("nu", params.nu)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed instance file {path}: {exc}") from exc
    if not math.isclose(nu, params.nu, rel_tol=1e-9):
        raise ConfigError(
            f"inconsistent instance file: nu={nu} but derived value is {params.nu}"
        )
    return saddle_chain_problem(params, ell=ell, rho=rho), params


def quadratic_problem(
    A: Array, B: Array, C: Array, rho: float = 1e-2
) -> MinimaxProblem:
    """f(x, y) = x'Ax/2 + x'By - y'Cy/2 with C positive definite.

    Closed forms: y*(x) = C^{-1} B' x, P(x) = x'(A + B C^{-1} B')x / 2.
    The second derivatives are constant, so any positive ``rho`` is a
    valid Hessian Lipschitz bound; the small default keeps the derived
    trust-region parameters from degenerating.
    """
    A = symmetrize(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = symmetrize(np.asarray(C, dtype=float))
    n, m = B.shape
    if A.shape != (n, n) or C.shape != (m, m):
        raise ValueError("inconsistent shapes for A, B, C")
    try:
        cho = scipy.linalg.cho_factor(C, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("C must be positive definite") from exc
    Cinv_Bt = scipy.linalg.cho_solve(cho, B.T)
    M = symmetrize(A + B @ Cinv_Bt)

    full = np.block([[A, B], [B.T, -C]])
    ell = float(np.linalg.norm(full, 2))
    mu = float(np.linalg.eigvalsh(C)[0])
    if mu <= 0:
        raise NotPositiveDefinite("C must be positive definite")

    return MinimaxProblem(
        dim_x=n,
        dim_y=m,
        eval_f=lambda x, y: float(
            0.5 * x @ (A @ x) + x @ (B @ y) - 0.5 * y @ (C @ y)
        ),
        grad_x=lambda x, y: A @ x + B @ y,
        grad_y=lambda x, y: B.T @ x - C @ y,
        hess_xx=lambda x, y: A,
        hess_xy=lambda x, y: B,
        hess_yy=lambda x, y: -C,
        ell=ell,
        mu=mu,
        rho=rho,
        closed_form_P=lambda x: float(0.5 * x @ (M @ x)),
        closed_form_grad_P=lambda x: M @ x,
        closed_form_hess_P=lambda x: M,
        closed_form_y_star=lambda x: Cinv_Bt @ x,
        P_lower_bound=0.0 if np.all(np.linalg.eigvalsh(M) >= -1e-12) else None,
        name=f"quadratic(n={n},m={m})",
    )


def random_quadratic(seed: int, n: int, m: int, convex: bool = True) -> MinimaxProblem:
    """Seeded random quadratic fixture; ``convex`` makes P convex so solver
    runs have a finite optimum (P* = 0 at the origin)."""
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n, n)) / math.sqrt(n)
    A = W @ W.T if convex else symmetrize(rng.standard_normal((n, n)))
    B = rng.standard_normal((n, m)) / math.sqrt(max(n, m))
    V = rng.standard_normal((m, m)) / math.sqrt(m)
    C = V @ V.T + 0.5 * np.eye(m)
    return quadratic_problem(A, B, C)
