"""Inexact linear-solver contract and its classical implementations.

Every solver takes a :class:`SolveRequest` and returns a
:class:`SolveOutcome` whose ``achieved`` residual is at most the request's
``epsilon`` on success.  The interior-point loop is solver-agnostic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import DimensionError, FactorizationError, ResidualNotMetError

__all__ = [
    "SolveRequest",
    "SolveOutcome",
    "solve_exact",
    "solve_cg",
    "solve_noisy_oracle",
    "exact_solver",
    "make_cg_solver",
    "make_noisy_solver",
]


@dataclass(frozen=True)
class SolveRequest:
    """One inexact solve of M z = sigma with a residual target.

    The operator is given as a dense symmetric matrix, as a factor E with
    M = E E', or both.  ``epsilon`` bounds ||M z - sigma||_2.
    """

    rhs: np.ndarray
    epsilon: float
    matrix: np.ndarray | None = None
    factor: np.ndarray | None = None

    def __post_init__(self):
        rhs = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        object.__setattr__(self, "rhs", rhs)
        if self.matrix is None and self.factor is None:
            raise DimensionError("request needs a matrix or a factor")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.matrix is not None:
            M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
            if M.shape[0] != M.shape[1] or M.shape[0] != rhs.size:
                raise DimensionError("matrix/rhs shapes are inconsistent")
            object.__setattr__(self, "matrix", M)
        if self.factor is not None:
            E = np.atleast_2d(np.asarray(self.factor, dtype=float))
            if E.shape[0] != rhs.size:
                raise DimensionError("factor/rhs shapes are inconsistent")
            object.__setattr__(self, "factor", E)

    @property
    def dim(self) -> int:
        return self.rhs.size

    def operator(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return self.factor @ self.factor.T

    def residual_norm(self, z: np.ndarray) -> float:
        return float(np.linalg.norm(self.operator() @ z - self.rhs))


@dataclass(frozen=True)
class SolveOutcome:
    z: np.ndarray
    achieved: float
    iterations: int
    tag: str
    shots: int = 0


def solve_exact(request: SolveRequest) -> SolveOutcome:
    """Reference oracle: dense Cholesky solve."""
    M = request.operator()
    try:
        cho = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise FactorizationError(f"matrix is not positive definite: {exc}") from exc
    z = scipy.linalg.cho_solve(cho, request.rhs, check_finite=False)
    return SolveOutcome(z=z, achieved=request.residual_norm(z), iterations=1,
                        tag="exact")


def solve_cg(request: SolveRequest) -> SolveOutcome:
    """Conjugate gradients to ||M z - sigma|| <= epsilon, capped at 10*dim
    iterations.  Works matrix-free on the factor when one is given."""
    dim = request.dim
    if request.factor is not None:
        E = request.factor

        def matvec(v):
            return E @ (E.T @ v)

        op = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=matvec)
    else:
        op = request.matrix
    count = {"n": 0}

    def callback(_):
        count["n"] += 1

    z, _ = scipy.sparse.linalg.cg(
        op, request.rhs, rtol=0.0, atol=request.epsilon,
        maxiter=10 * dim, callback=callback,
    )
    achieved = request.residual_norm(z)
    if achieved > request.epsilon:
        raise ResidualNotMetError(
            f"CG stopped at residual {achieved:.3e} > target "
            f"{request.epsilon:.3e} after {count['n']} iterations",
            best=z, achieved=achieved,
        )
    return SolveOutcome(z=z, achieved=achieved, iterations=count["n"], tag="cg")


def solve_noisy_oracle(request: SolveRequest, noise_mode: str = "uniform",
                       seed: int = 0, rho_fill: float = 0.9) -> SolveOutcome:
    """Exact solve plus a seeded perturbation that fills ``rho_fill`` of the
    allowed residual budget: z = z* + p with ||M p|| = rho_fill * epsilon.

    ``uniform`` draws the direction of p uniformly on the sphere;
    ``adversarial`` aligns p with the smallest-eigenvalue eigenvector of M,
    which maximizes the solution error per unit of residual.
    """
    exact = solve_exact(request)
    if rho_fill == 0.0:
        return SolveOutcome(z=exact.z, achieved=exact.achieved, iterations=1,
                            tag="noisy")
    M = request.operator()
    if noise_mode == "uniform":
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(request.dim)
        u /= np.linalg.norm(u)
    elif noise_mode == "adversarial":
        _, vecs = np.linalg.eigh(M)
        u = vecs[:, 0]
    else:
        raise ValueError(f"unknown noise mode {noise_mode!r}")
    p = (rho_fill * request.epsilon / np.linalg.norm(M @ u)) * u
    z = exact.z + p
    return SolveOutcome(z=z, achieved=request.residual_norm(z), iterations=1,
                        tag="noisy")


def exact_solver(request: SolveRequest) -> SolveOutcome:
    """Solver-contract callable for the exact oracle."""
    return solve_exact(request)


def make_cg_solver():
    def solver(request: SolveRequest) -> SolveOutcome:
        return solve_cg(request)

    return solver


def make_noisy_solver(seed: int = 0, rho_fill: float = 0.9,
                      noise_mode: str = "uniform"):
    """Noisy-oracle solver with a deterministic per-call seed sequence, so a
    whole IPM run is reproducible from one base seed."""
    counter = itertools.count()

    def solver(request: SolveRequest) -> SolveOutcome:
        call_seed = np.random.SeedSequence((seed, next(counter))).generate_state(1)[0]
        return solve_noisy_oracle(request, noise_mode=noise_mode,
                                  seed=call_seed, rho_fill=rho_fill)

    return solver
