"""Inexact-infeasible interior point main loop.

Starts at (omega e, 0, omega e), solves the MNES inexactly through a
pluggable solver, recovers the Newton direction, takes the largest
admissible step, and stops at a zeta-optimal point.  Divergence of the
iterates past omega is reported as primal or dual infeasibility (or omega
chosen too small).  The lemmas backing convergence are enforced as runtime
checks on every iteration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvariantViolationError,
    ResidualNotMetError,
    StepFailureError,
)
from .lp_core import (
    Iterate,
    IpmParams,
    LpProblem,
    PreprocessedLp,
    condition_report,
    duality_measure,
    in_neighborhood,
    is_zeta_optimal,
    preprocess,
    residuals,
)
from .newton import (
    build_mnes,
    direction_defects,
    max_step_length,
    recover_direction,
)
from .solvers import SolveRequest, exact_solver

__all__ = ["IpmStatus", "TraceRow", "IpmResult", "initialize", "solve"]

# Relative tolerance for the first two Newton equations and the corrected
# third equation after direction recovery.
EQ_TOL = 1e-10
# Relative tolerance for residual collinearity R^k = theta^{k-1} R^0.
COLLINEARITY_TOL = 1e-8


class IpmStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE_DETECTED = "infeasible_detected"
    ITERATION_LIMIT = "iteration_limit"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class TraceRow:
    """Per-iteration diagnostics, in trace-CSV column order."""

    iter: int
    mu: float
    alpha_hat: float
    alpha_tilde: float
    norm_rp: float
    norm_rd: float
    mnes_residual: float
    kappa_mnes: float
    kappa_nes: float
    solver_calls: int
    theta: float


@dataclass
class IpmResult:
    status: IpmStatus
    iterate: Iterate
    trace: list[TraceRow]
    gamma2: float
    preprocessed: PreprocessedLp
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.trace)


def initialize(problem: LpProblem, params: IpmParams) -> tuple[Iterate, float]:
    """Starting point (omega e, 0, omega e) and the neighborhood width
    gamma2 = max{1, ||(R_P0, R_D0)|| / mu0} that admits it."""
    n, m = problem.n, problem.m
    iterate = Iterate(
        x=np.full(n, params.omega), y=np.zeros(m), s=np.full(n, params.omega)
    )
    res = residuals(problem, iterate)
    gamma2 = max(1.0, res.joint_norm / res.mu)
    return iterate, gamma2


def _check(condition: bool, what: str, detail: str = ""):
    if not condition:
        raise InvariantViolationError(f"{what} violated {detail}".rstrip())


def solve(problem: LpProblem, params: IpmParams | None = None,
          solver=exact_solver, pre: PreprocessedLp | None = None,
          check_invariants: bool = True) -> IpmResult:
    """Run the IPM until zeta-optimality, divergence, step failure, or the
    iteration cap.

    ``solver`` is any callable following the solver contract; ``pre`` may
    carry a precomputed basis normalization (reused across refinement
    rounds).  With ``check_invariants`` every iteration asserts the
    residual-transfer lemma, the step bound alpha_hat >= alpha_tilde,
    residual collinearity, the Armijo decrease, and neighborhood
    membership; violations raise :class:`InvariantViolationError`.
    """
    params = params or IpmParams()
    if pre is None:
        pre = preprocess(problem)
    iterate, gamma2 = initialize(problem, params)
    run_params = params.with_gamma2(gamma2)
    res0 = residuals(problem, iterate)
    ratio0 = res0.joint_norm / res0.mu
    theta = 1.0
    trace: list[TraceRow] = []

    for k in range(params.max_iterations):
        res = residuals(problem, iterate)
        if is_zeta_optimal(problem, iterate, params.zeta):
            return IpmResult(IpmStatus.OPTIMAL, iterate, trace, gamma2, pre)

        mnes = build_mnes(pre, iterate, params.beta1, params.eta)
        request = SolveRequest(
            rhs=mnes.sigma_hat, epsilon=mnes.epsilon_target,
            matrix=mnes.M_hat, factor=mnes.E,
        )
        try:
            outcome = solver(request)
        except ResidualNotMetError as exc:
            return IpmResult(IpmStatus.STEP_FAILURE, iterate, trace, gamma2,
                             pre, message=str(exc))
        direction = recover_direction(pre, iterate, outcome.z, params.beta1,
                                      mnes)

        if check_invariants:
            defects = direction_defects(problem, iterate, direction,
                                        params.beta1, mnes.mu)
            _check(defects["primal"] <= EQ_TOL, "first Newton equation",
                   f"(defect {defects['primal']:.2e})")
            _check(defects["dual"] <= EQ_TOL, "second Newton equation",
                   f"(defect {defects['dual']:.2e})")
            _check(defects["third"] <= EQ_TOL, "third Newton equation",
                   f"(defect {defects['third']:.2e})")
            if defects["r_hat_norm"] <= mnes.epsilon_target * (1 + 1e-9):
                _check(defects["sv_inf"] <= params.eta * mnes.mu * (1 + 1e-9),
                       "residual-transfer bound ||Sv||_inf <= eta*mu",
                       f"({defects['sv_inf']:.2e} vs {params.eta * mnes.mu:.2e})")

        try:
            report = max_step_length(problem, iterate, direction, run_params,
                                     theta_prev=theta)
        except StepFailureError as exc:
            return IpmResult(IpmStatus.STEP_FAILURE, iterate, trace, gamma2,
                             pre, message=str(exc))

        new_iterate = iterate.step(report.alpha_hat, direction.dx,
                                   direction.dy, direction.ds)
        theta = report.theta
        d = np.sqrt(iterate.x / iterate.s)
        nes_matrix = (problem.A * (d * d)[None, :]) @ problem.A.T
        trace.append(TraceRow(
            iter=k,
            mu=res.mu,
            alpha_hat=report.alpha_hat,
            alpha_tilde=report.alpha_tilde,
            norm_rp=float(np.linalg.norm(res.r_p)),
            norm_rd=float(np.linalg.norm(res.r_d)),
            mnes_residual=float(np.linalg.norm(direction.r_hat)),
            kappa_mnes=condition_report(mnes.M_hat).kappa,
            kappa_nes=condition_report(nes_matrix).kappa,
            solver_calls=outcome.iterations,
            theta=theta,
        ))

        if check_invariants:
            _check(report.alpha_hat >= report.alpha_tilde - 1e-12,
                   "step bound alpha_hat >= alpha_tilde",
                   f"({report.alpha_hat:.3e} < {report.alpha_tilde:.3e})")
            new_res = residuals(problem, new_iterate)
            _check(
                np.linalg.norm(new_res.r_p - theta * res0.r_p)
                <= COLLINEARITY_TOL * max(1.0, np.linalg.norm(res0.r_p)),
                "primal residual collinearity")
            _check(
                np.linalg.norm(new_res.r_d - theta * res0.r_d)
                <= COLLINEARITY_TOL * max(1.0, np.linalg.norm(res0.r_d)),
                "dual residual collinearity")
            old_gap = np.dot(iterate.x, iterate.s)
            new_gap = np.dot(new_iterate.x, new_iterate.s)
            armijo = (1.0 - report.alpha_hat * (1.0 - params.beta2)) * old_gap
            _check(new_gap <= armijo * (1 + 1e-12) + 1e-12,
                   "Armijo decrease",
                   f"(gap {new_gap:.6e} vs bound {armijo:.6e})")
            _check(in_neighborhood(problem, new_iterate, params.gamma1,
                                   gamma2),
                   "neighborhood membership of accepted iterate")
            _check(new_res.joint_norm <= ratio0 * new_res.mu * (1 + 1e-9),
                   "infeasibility-to-mu ratio monotonicity")

        iterate = new_iterate
        if max(np.max(np.abs(iterate.x)), np.max(np.abs(iterate.s))) > params.omega:
            return IpmResult(
                IpmStatus.INFEASIBLE_DETECTED, iterate, trace, gamma2, pre,
                message="primal or dual infeasible, or omega too small",
            )

    return IpmResult(IpmStatus.ITERATION_LIMIT, iterate, trace, gamma2, pre)
