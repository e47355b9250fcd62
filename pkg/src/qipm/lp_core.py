"""Standard-form LO data model, preprocessing, and optimality predicates.

A problem is ``min c'x  s.t.  Ax = b, x >= 0`` with dual
``max b'y  s.t.  A'y + s = c, s >= 0``.  All norms are 2-norms unless a
different one is part of a definition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConfigError,
    DimensionError,
    InvalidIterateError,
    NonIntegerDataError,
    RankDeficientError,
)

__all__ = [
    "LpProblem",
    "PreprocessedLp",
    "Iterate",
    "Residuals",
    "IpmParams",
    "ConditionReport",
    "duality_measure",
    "residuals",
    "in_neighborhood",
    "is_zeta_optimal",
    "binary_length",
    "preprocess",
    "condition_report",
]

# Pivot below RANK_TOL * max|A| counts as zero when hunting for a basis.
RANK_TOL = 1e-12


def _vec(v, n, name) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {v.shape}")
    return v


@dataclass(frozen=True)
class LpProblem:
    """Standard-form problem data (A, b, c).

    ``A`` must be m x n with full row rank and m <= n.  Known optimal
    solutions may be attached (the instance generator does this).
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    integer_data: bool = False
    x_star: np.ndarray | None = None
    y_star: np.ndarray | None = None
    s_star: np.ndarray | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.ndim != 2:
            raise DimensionError("A must be a matrix")
        m, n = A.shape
        if m > n:
            raise DimensionError(f"need m <= n, got m={m}, n={n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", _vec(self.b, m, "b"))
        object.__setattr__(self, "c", _vec(self.c, n, "c"))
        for name, size in (("x_star", n), ("y_star", m), ("s_star", n)):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _vec(v, size, name))
        basis = _independent_columns(A)
        if len(basis) < m:
            independent_rows = set(_independent_columns(A.T))
            dependent = [i for i in range(m) if i not in independent_rows]
            raise RankDeficientError(
                f"A has row rank {len(basis)} < m={m}; "
                f"dependent rows: {dependent}",
                dependent_rows=dependent,
            )

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class PreprocessedLp:
    """Basis-normalized problem: A_hat = inv(A_B) A, b_hat = inv(A_B) b.

    The basis block of ``A_hat`` is the identity; ``c`` is unchanged and
    lives on ``problem``.
    """

    problem: LpProblem
    basis: np.ndarray            # m column indices into A
    A_B_inv: np.ndarray          # m x m
    A_hat: np.ndarray            # m x n
    b_hat: np.ndarray            # m
    kappa_A_hat: float
    phi: float                   # ||A_hat|| + ||b_hat||

    @property
    def m(self) -> int:
        return self.problem.m

    @property
    def n(self) -> int:
        return self.problem.n


@dataclass(frozen=True)
class Iterate:
    """Primal-dual point (x, y, s)."""

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        s = np.atleast_1d(np.asarray(self.s, dtype=float))
        if x.shape != s.shape:
            raise DimensionError("x and s must have the same length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", s)

    def is_interior(self) -> bool:
        return bool(np.all(self.x > 0) and np.all(self.s > 0))

    def step(self, alpha: float, dx, dy, ds) -> "Iterate":
        return Iterate(self.x + alpha * dx, self.y + alpha * dy, self.s + alpha * ds)


@dataclass(frozen=True)
class Residuals:
    """Primal/dual residuals and the duality measure of an iterate."""

    r_p: np.ndarray              # b - Ax
    r_d: np.ndarray              # c - A'y - s
    mu: float                    # x's / n

    @property
    def joint_norm(self) -> float:
        return float(np.sqrt(np.dot(self.r_p, self.r_p) + np.dot(self.r_d, self.r_d)))


@dataclass(frozen=True)
class IpmParams:
    """Algorithm parameters. Defaults are a valid choice per the method's
    requirement 0 < eta < beta1 < beta2 < 1, gamma1 in (0,1), omega >= 1."""

    gamma1: float = 0.5
    beta1: float = 0.5
    beta2: float = 0.9995
    eta: float = 0.4
    omega: float = 10.0
    zeta: float = 0.1            # target precision of a single run
    max_iterations: int = 500
    gamma2: float | None = None  # set from the starting residuals

    def __post_init__(self):
        if not 0.0 < self.gamma1 < 1.0:
            raise ConfigError(f"gamma1 must be in (0,1), got {self.gamma1}")
        if not 0.0 < self.eta < self.beta1 < self.beta2 < 1.0:
            raise ConfigError(
                "need 0 < eta < beta1 < beta2 < 1, got "
                f"eta={self.eta}, beta1={self.beta1}, beta2={self.beta2}"
            )
        if self.omega < 1.0:
            raise ConfigError(f"omega must be >= 1, got {self.omega}")
        if self.zeta <= 0.0:
            raise ConfigError(f"zeta must be positive, got {self.zeta}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.gamma2 is not None and self.gamma2 < 1.0:
            raise ConfigError(f"gamma2 must be >= 1, got {self.gamma2}")

    def with_gamma2(self, gamma2: float) -> "IpmParams":
        return replace(self, gamma2=float(gamma2))


@dataclass(frozen=True)
class ConditionReport:
    """Spectral diagnostics of a matrix (full SVD; desk scale only)."""

    kappa: float
    norm2: float
    frobenius: float
    singular: bool = False


def duality_measure(problem: LpProblem, iterate: Iterate) -> float:
    """mu = x's / n."""
    if iterate.x.shape != (problem.n,):
        raise DimensionError("iterate does not match problem dimensions")
    return float(np.dot(iterate.x, iterate.s) / problem.n)


def residuals(problem: LpProblem, iterate: Iterate) -> Residuals:
    """Primal residual b - Ax, dual residual c - A'y - s, and mu."""
    if iterate.x.shape != (problem.n,) or iterate.y.shape != (problem.m,):
        raise DimensionError("iterate does not match problem dimensions")
    r_p = problem.b - problem.A @ iterate.x
    r_d = problem.c - problem.A.T @ iterate.y - iterate.s
    return Residuals(r_p=r_p, r_d=r_d, mu=duality_measure(problem, iterate))


def in_neighborhood(problem: LpProblem, iterate: Iterate, gamma1: float,
                    gamma2: float) -> bool:
    """Membership in N(gamma1, gamma2): x_i s_i >= gamma1*mu for all i and
    ||(R_P, R_D)|| <= gamma2*mu."""
    if not iterate.is_interior():
        raise InvalidIterateError("neighborhood test requires x > 0 and s > 0")
    res = residuals(problem, iterate)
    if np.min(iterate.x * iterate.s) < gamma1 * res.mu:
        return False
    return res.joint_norm <= gamma2 * res.mu


def is_zeta_optimal(problem: LpProblem, iterate: Iterate, zeta: float) -> bool:
    """(x, s) >= 0, x's/n <= zeta, and ||(R_P, R_D)|| <= zeta."""
    if np.any(iterate.x < 0) or np.any(iterate.s < 0):
        return False
    res = residuals(problem, iterate)
    return res.mu <= zeta and res.joint_norm <= zeta


def binary_length(problem: LpProblem) -> int:
    """Bit-size measure of integer problem data:

    L = mn + m + n + sum ceil(log2(|a_ij|+1)) + sum ceil(log2(|c_i|+1))
        + sum ceil(log2(|b_j|+1))
    """
    for arr, name in ((problem.A, "A"), (problem.b, "b"), (problem.c, "c")):
        if not np.all(arr == np.round(arr)):
            raise NonIntegerDataError(f"{name} has non-integer entries")

    def bits(arr):
        return int(np.sum(np.ceil(np.log2(np.abs(arr) + 1.0))))

    m, n = problem.m, problem.n
    return m * n + m + n + bits(problem.A) + bits(problem.c) + bits(problem.b)


def _independent_columns(A: np.ndarray, preferred_order=None) -> list[int]:
    """First m linearly independent columns by greedy elimination with
    partial pivoting, scanning columns in the given order (natural order
    by default)."""
    m, n = A.shape
    order = range(n) if preferred_order is None else preferred_order
    tol = RANK_TOL * max(np.abs(A).max(), 1.0)
    work = np.array(A, dtype=float)
    basis: list[int] = []
    row = 0
    for j in order:
        if row == m:
            break
        col = work[row:, j]
        p = int(np.argmax(np.abs(col)))
        if np.abs(col[p]) <= tol:
            continue
        if p != 0:
            work[[row, row + p], :] = work[[row + p, row], :]
        pivot_row = work[row, :] / work[row, j]
        below = work[row + 1 :, j]
        work[row + 1 :, :] -= np.outer(below, pivot_row)
        basis.append(j)
        row += 1
    return basis


def _identity_block(A: np.ndarray) -> list[int] | None:
    """Column indices forming an exact identity block, if one exists."""
    m, n = A.shape
    cols: list[int] = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        hit = None
        for j in range(n):
            if j in cols:
                continue
            if np.array_equal(A[:, j], e):
                hit = j
                break
        if hit is None:
            return None
        cols.append(hit)
    return cols


def preprocess(problem: LpProblem, preferred_order=None) -> PreprocessedLp:
    """Normalize by an arbitrary basis: A_hat = inv(A_B) A, b_hat = inv(A_B) b.

    The basis is the first m linearly independent columns; an exact identity
    block is used when present (canonical-form problems need no work).
    ``preferred_order`` reorders the column scan, e.g. to favor columns
    expected to be basic at the optimum.
    """
    A = problem.A
    m = problem.m
    basis = None
    if preferred_order is None:
        basis = _identity_block(A)
    if basis is None:
        if preferred_order is not None:
            order = list(preferred_order) + [
                j for j in range(problem.n) if j not in set(preferred_order)
            ]
        else:
            order = None
        basis = _independent_columns(A, order)
    if len(basis) < m:
        raise RankDeficientError(
            f"A has row rank {len(basis)} < m={m}", dependent_rows=()
        )
    A_B = A[:, basis]
    A_B_inv = np.linalg.inv(A_B)
    A_hat = np.linalg.solve(A_B, A)
    b_hat = np.linalg.solve(A_B, problem.b)
    report = condition_report(A_hat)
    return PreprocessedLp(
        problem=problem,
        basis=np.asarray(basis, dtype=int),
        A_B_inv=A_B_inv,
        A_hat=A_hat,
        b_hat=b_hat,
        kappa_A_hat=report.kappa,
        phi=report.norm2 + float(np.linalg.norm(b_hat)),
    )


def condition_report(matrix: np.ndarray) -> ConditionReport:
    """kappa = sigma_max / sigma_min via full SVD, plus 2- and F-norms.

    sigma_min below 1e-14 * sigma_max is reported as numerically singular
    (kappa = inf).
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        raise DimensionError("matrix must be nonempty")
    svals = np.linalg.svd(matrix, compute_uv=False)
    smax = float(svals[0])
    smin = float(svals[-1])
    singular = smin <= 1e-14 * smax
    kappa = np.inf if singular else smax / smin
    return ConditionReport(
        kappa=float(kappa),
        norm2=smax,
        frobenius=float(np.linalg.norm(matrix)),
        singular=singular,
    )
