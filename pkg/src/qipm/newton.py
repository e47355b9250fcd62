"""Modified normal equation system (MNES) and Newton-step machinery.

The Newton system for a standard-form LP at an interior iterate reduces to
the normal equations M dy = sigma with M = A D^2 A'.  Scaling by the basis
block, E = inv(D_B) A_hat D and M_hat = E E', confines any residual of an
inexact solve to the complementarity equation: after recovery, the first
two Newton equations hold exactly and the third picks up the defect -S v
with v supported on the basis columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidIterateError, StepFailureError
from .lp_core import (
    Iterate,
    IpmParams,
    LpProblem,
    PreprocessedLp,
    duality_measure,
    in_neighborhood,
    residuals,
)

__all__ = [
    "MnesSystem",
    "NewtonDirection",
    "StepReport",
    "StepFunctions",
    "build_mnes",
    "recover_direction",
    "eval_step_functions",
    "compute_nu",
    "compute_alpha_tilde",
    "max_step_length",
    "direction_defects",
]

# Below this step length the search gives up and reports a step failure.
MIN_STEP = 1e-8
# Absolute bisection tolerance on the returned step length.
STEP_TOL = 1e-3
# Interior sample count when checking prefix admissibility on [0, alpha].
GRID_POINTS = 16


@dataclass(frozen=True)
class MnesSystem:
    """Scaled normal equations M_hat z = sigma_hat with M_hat = E E'."""

    D: np.ndarray              # diag entries, length n: sqrt(x/s)
    D_B: np.ndarray            # diag entries on the basis columns, length m
    E: np.ndarray              # m x n, inv(D_B) A_hat D
    M_hat: np.ndarray          # m x m, E E'
    sigma_hat: np.ndarray      # m
    epsilon_target: float      # eta * sqrt(mu) / sqrt(n)
    mu: float


@dataclass(frozen=True)
class NewtonDirection:
    """Recovered direction plus the residual bookkeeping of the recovery."""

    dx: np.ndarray
    dy: np.ndarray
    ds: np.ndarray
    v: np.ndarray              # correction, zero off the basis columns
    r_hat: np.ndarray          # M_hat z - sigma_hat actually achieved
    z: np.ndarray              # raw inexact MNES solution


@dataclass(frozen=True)
class StepFunctions:
    G_min: float
    g: float
    h: float


@dataclass(frozen=True)
class StepReport:
    """Accepted step length and the quantities certifying it."""

    alpha_hat: float
    alpha_tilde: float
    nu: float
    delta1: float
    delta2: float
    delta3: float
    theta: float               # running product of (1 - alpha_hat)


def build_mnes(pre: PreprocessedLp, iterate: Iterate, beta1: float,
               eta: float = 0.4) -> MnesSystem:
    """Assemble E, M_hat and sigma_hat at the current iterate.

    sigma_hat = inv(D_B) b_hat - beta1*mu*inv(D_B) A_hat inv(S) e
                + inv(D_B) A_hat D^2 (c - A'y - s)
    """
    x, s = iterate.x, iterate.s
    if np.any(x <= 0) or np.any(s <= 0):
        raise InvalidIterateError("MNES needs x > 0 and s > 0")
    problem = pre.problem
    n = problem.n
    mu = duality_measure(problem, iterate)
    d = np.sqrt(x / s)
    d_B = d[pre.basis]
    E = (pre.A_hat * d[None, :]) / d_B[:, None]
    r_d = problem.c - problem.A.T @ iterate.y - s
    sigma_hat = (
        pre.b_hat
        - beta1 * mu * (pre.A_hat @ (1.0 / s))
        + pre.A_hat @ (d * d * r_d)
    ) / d_B
    return MnesSystem(
        D=d,
        D_B=d_B,
        E=E,
        M_hat=E @ E.T,
        sigma_hat=sigma_hat,
        epsilon_target=eta * np.sqrt(mu) / np.sqrt(n),
        mu=mu,
    )


def recover_direction(pre: PreprocessedLp, iterate: Iterate, z: np.ndarray,
                      beta1: float, mnes: MnesSystem | None = None) -> NewtonDirection:
    """Steps 2-5: turn an inexact MNES solution z into (dx, dy, ds).

    dy = (inv(D_B) inv(A_B))' z, v = (D_B r_hat, 0),
    ds = c - A'y - s - A' dy, dx = beta1*mu*inv(S)e - x - D^2 ds - v.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    problem = pre.problem
    if z.shape != (problem.m,):
        raise DimensionError(f"z must have length {problem.m}")
    if mnes is None:
        mnes = build_mnes(pre, iterate, beta1)
    r_hat = mnes.M_hat @ z - mnes.sigma_hat
    dy = pre.A_B_inv.T @ (z / mnes.D_B)
    v = np.zeros(problem.n)
    v[pre.basis] = mnes.D_B * r_hat
    r_d = problem.c - problem.A.T @ iterate.y - iterate.s
    ds = r_d - problem.A.T @ dy
    dx = beta1 * mnes.mu / iterate.s - iterate.x - mnes.D * mnes.D * ds - v
    return NewtonDirection(dx=dx, dy=dy, ds=ds, v=v, r_hat=r_hat, z=z)


def direction_defects(problem: LpProblem, iterate: Iterate,
                      direction: NewtonDirection, beta1: float,
                      mu: float) -> dict:
    """Measured defects of the three Newton equations, normalised by the
    equation scales (so thresholds are relative tolerances).

    The third equation is checked against its corrected right-hand side,
    i.e. the reported defect is || X ds + S dx - (beta1 mu e - XSe - Sv) ||.
    """
    A, b, c = problem.A, problem.b, problem.c
    x, y, s = iterate.x, iterate.y, iterate.s
    dx, dy, ds = direction.dx, direction.dy, direction.ds
    r_p = b - A @ x
    r_d = c - A.T @ y - s
    e1 = A @ dx - r_p
    e2 = A.T @ dy + ds - r_d
    third_rhs = beta1 * mu - x * s - s * direction.v
    e3 = x * ds + s * dx - third_rhs
    scale1 = max(1.0, np.linalg.norm(r_p),
                 np.linalg.norm(A, ord="fro") * np.linalg.norm(dx))
    scale2 = max(1.0, np.linalg.norm(r_d),
                 np.linalg.norm(A, ord="fro") * np.linalg.norm(dy))
    scale3 = max(1.0, np.dot(x, s),
                 float(np.linalg.norm(x * ds) + np.linalg.norm(s * dx)))
    return {
        "primal": float(np.linalg.norm(e1) / scale1),
        "dual": float(np.linalg.norm(e2) / scale2),
        "third": float(np.linalg.norm(e3) / scale3),
        "sv_inf": float(np.max(np.abs(s * direction.v))),
        "r_hat_norm": float(np.linalg.norm(direction.r_hat)),
    }


def _poly_coeffs(iterate: Iterate, direction: NewtonDirection):
    """Elementwise and aggregate quadratic coefficients of x(a)*s(a)."""
    w = iterate.x * iterate.s
    u = iterate.x * direction.ds + iterate.s * direction.dx
    q = direction.dx * direction.ds
    return w, u, q, float(w.sum()), float(u.sum()), float(q.sum())


def eval_step_functions(problem: LpProblem, iterate: Iterate,
                        direction: NewtonDirection, alpha: float,
                        gamma1: float, beta2: float) -> StepFunctions:
    """G_min, g, h at a trial step length.

    G_i = x_i(a)s_i(a) - gamma1*mu(a); g = x(a)'s(a) - (1-a)x's;
    h = (1 - a(1-beta2))x's - x(a)'s(a).
    """
    w, u, q, T0, T1, T2 = _poly_coeffs(iterate, direction)
    n = problem.n
    prods = w + alpha * u + alpha * alpha * q
    total = T0 + alpha * T1 + alpha * alpha * T2
    G_min = float(np.min(prods - gamma1 * total / n))
    g = total - (1.0 - alpha) * T0
    h = (1.0 - alpha * (1.0 - beta2)) * T0 - total
    return StepFunctions(G_min=G_min, g=float(g), h=float(h))


def compute_nu(direction: NewtonDirection, gamma1: float, n: int) -> float:
    """Empirical coupling bound:
    nu = max(|dx'ds|, max_i |dx_i ds_i - (gamma1/n) dx'ds|)."""
    dot = float(np.dot(direction.dx, direction.ds))
    per = np.abs(direction.dx * direction.ds - (gamma1 / n) * dot)
    return max(abs(dot), float(np.max(per)) if per.size else 0.0)


def deltas(params: IpmParams, n: int) -> tuple[float, float, float]:
    d1 = (1.0 - params.gamma1) * (params.beta1 - params.eta) / n
    d2 = params.beta1 - params.eta
    d3 = params.beta2 - params.beta1 + params.eta
    return d1, d2, d3


def compute_alpha_tilde(iterate: Iterate, nu: float, params: IpmParams) -> float:
    """Theoretical lower bound min{1, min{d1,d2,d3} x's / nu} (1 when nu=0)."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    if nu == 0.0:
        return 1.0
    d1, d2, d3 = deltas(params, iterate.x.size)
    return min(1.0, min(d1, d2, d3) * float(np.dot(iterate.x, iterate.s)) / nu)


def _quad_min_on_interval(a: float, b: float, c: float, hi: float) -> float:
    """Minimum of a*t^2 + b*t + c over [0, hi]."""
    best = min(c, a * hi * hi + b * hi + c)
    if a > 0.0:
        t = -b / (2.0 * a)
        if 0.0 < t < hi:
            best = min(best, a * t * t + b * t + c)
    return best


class _PrefixChecker:
    """Prefix admissibility of a trial step: every alpha' in [0, alpha]
    must keep the iterate in N(gamma1, gamma2), keep (x, s) > 0, and
    satisfy the Armijo condition h >= 0.

    G_i, g, h and the scaled feasibility margin are quadratics in alpha, so
    interval minima are checked in closed form; a 16-point grid plus the
    endpoint re-checks the definitions directly.
    """

    def __init__(self, problem, iterate, direction, params, gamma2):
        self.problem = problem
        self.it = iterate
        self.dir = direction
        self.params = params
        self.gamma2 = gamma2
        w, u, q, T0, T1, T2 = _poly_coeffs(iterate, direction)
        n = problem.n
        g1 = params.gamma1
        self.T0 = T0
        self.tol = 1e-12 * max(1.0, T0)
        # G_i(alpha) coefficients (c_i, b_i, a_i)
        self.G = (w - g1 * T0 / n, u - g1 * T1 / n, q - g1 * T2 / n)
        self.g_lin = (T1 + T0, T2)          # g(alpha) = alpha*(b + a*alpha)
        self.h_lin = (-(1.0 - params.beta2) * T0 - T1, -T2)
        res = residuals(problem, iterate)
        # gamma2*mu(alpha) - (1-alpha)||R||, valid because the recovered
        # direction zeroes the first two Newton equations.
        self.feas = (
            gamma2 * T0 / n - res.joint_norm,
            gamma2 * T1 / n + res.joint_norm,
            gamma2 * T2 / n,
        )
        # Largest alpha keeping x, s strictly positive.
        ratios = []
        for val, step in ((iterate.x, direction.dx), (iterate.s, direction.ds)):
            neg = step < 0
            if np.any(neg):
                ratios.append(float(np.min(val[neg] / -step[neg])))
        self.alpha_pos = min(ratios) if ratios else np.inf

    def _certificates(self, alpha: float) -> bool:
        if alpha >= self.alpha_pos * (1.0 - 1e-12):
            return False
        cG, bG, aG = self.G
        for i in range(cG.size):
            if _quad_min_on_interval(aG[i], bG[i], cG[i], alpha) < -self.tol:
                return False
        for b, a in (self.g_lin, self.h_lin):
            # alpha * (b + a*alpha) >= 0 on [0, alpha]: linear bracket check
            if min(b, b + a * alpha) < -self.tol / max(alpha, 1e-16):
                return False
        cF, bF, aF = self.feas
        if _quad_min_on_interval(aF, bF, cF, alpha) < -self.tol:
            return False
        return True

    def _grid(self, alpha: float) -> bool:
        for t in np.linspace(0.0, alpha, GRID_POINTS + 2)[1:]:
            cand = self.it.step(t, self.dir.dx, self.dir.dy, self.dir.ds)
            if not cand.is_interior():
                return False
            if not in_neighborhood(self.problem, cand, self.params.gamma1,
                                   self.gamma2):
                return False
            f = eval_step_functions(self.problem, self.it, self.dir, t,
                                    self.params.gamma1, self.params.beta2)
            if f.h < -self.tol:
                return False
        return True

    def __call__(self, alpha: float) -> bool:
        return self._certificates(alpha) and self._grid(alpha)


def max_step_length(problem: LpProblem, iterate: Iterate,
                    direction: NewtonDirection, params: IpmParams,
                    theta_prev: float = 1.0) -> StepReport:
    """Largest step with the whole prefix [0, alpha] admissible.

    Backtracks from 1 by halving, then bisects to absolute tolerance 1e-3;
    the theoretical bound alpha_tilde is tried as a final candidate so the
    guarantee alpha_hat >= alpha_tilde survives the discrete search.
    """
    if params.gamma2 is None:
        raise ValueError("params.gamma2 must be set (run initialize first)")
    nu = compute_nu(direction, params.gamma1, problem.n)
    alpha_tilde = compute_alpha_tilde(iterate, nu, params)
    admissible = _PrefixChecker(problem, iterate, direction, params,
                                params.gamma2)

    alpha = 1.0
    while alpha >= MIN_STEP and not admissible(alpha):
        alpha *= 0.5
    if alpha < MIN_STEP:
        if alpha_tilde >= MIN_STEP and admissible(alpha_tilde):
            alpha = alpha_tilde
        else:
            raise StepFailureError(
                "no admissible step length >= 1e-8; the inexact solver "
                "residual likely exceeded its target"
            )
    elif alpha < 1.0:
        lo, hi = alpha, min(2.0 * alpha, 1.0)
        while hi - lo > STEP_TOL:
            mid = 0.5 * (lo + hi)
            if admissible(mid):
                lo = mid
            else:
                hi = mid
        alpha = lo
    if alpha_tilde > alpha and admissible(alpha_tilde):
        alpha = alpha_tilde

    d1, d2, d3 = deltas(params, problem.n)
    return StepReport(
        alpha_hat=float(alpha),
        alpha_tilde=float(alpha_tilde),
        nu=float(nu),
        delta1=d1,
        delta2=d2,
        delta3=d3,
        theta=float(theta_prev * (1.0 - alpha)),
    )
