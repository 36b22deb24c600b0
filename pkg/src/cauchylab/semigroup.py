"""First-order contraction semigroup via the exponential formula.

S(t)x is approximated by the n-fold composition of the resolvent at
step t/n.  For linear operators the composition equals a matrix power
of the single-step resolvent and is evaluated that way; nonlinear
entries run the literal sequential composition.  ``semigroup_point``
wraps the formula with Richardson-style stopping on successive doubling
of n.  The engine serves as an oracle and as a generator of first-order
orbits; the asymptotic targets of the package live in the second-order
module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import AccretiveOperator


@dataclass(frozen=True)
class ExpFormulaConfig:
    n_min: int = 16
    n_max: int = 2**20
    tol: float = 1e-8

    def __post_init__(self):
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ValueError("require 1 <= n_min <= n_max")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class SemigroupMeta:
    n_used: int
    achieved: float
    converged: bool


def exp_formula(op: AccretiveOperator, t: float, x: np.ndarray, n: int) -> np.ndarray:
    """n-fold composition of the resolvent at step t/n applied to x."""
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    if n < 1:
        raise ValueError("step count must be positive")
    x = op.space.check(x)
    if t == 0.0:
        return x.copy()
    gamma = t / n
    b = op.linear_matrix
    if b is not None:
        single = np.linalg.inv(np.eye(op.space.dim) + gamma * b)
        return np.linalg.matrix_power(single, n) @ x
    z = x.copy()
    for _ in range(n):
        z = op.resolvent(gamma, z)
    return z


def semigroup_point(
    op: AccretiveOperator,
    t: float,
    x: np.ndarray,
    cfg: ExpFormulaConfig | None = None,
) -> tuple[np.ndarray, SemigroupMeta]:
    """Evaluate S(t)x, doubling n from n_min until successive values agree
    within cfg.tol or n_max is reached.

    Hitting n_max without agreement is flagged in the metadata, not an
    error: the last iterate is still the best available value.
    """
    if cfg is None:
        cfg = ExpFormulaConfig()
    x = op.space.check(x)
    if t == 0.0:
        return x.copy(), SemigroupMeta(n_used=cfg.n_min, achieved=0.0, converged=True)
    n = cfg.n_min
    prev = exp_formula(op, t, x, n)
    diff = float("nan")
    while 2 * n <= cfg.n_max:
        n *= 2
        cur = exp_formula(op, t, x, n)
        diff = float(op.space.norm(cur - prev))
        if diff <= cfg.tol:
            return cur, SemigroupMeta(n_used=n, achieved=diff, converged=True)
        prev = cur
    return prev, SemigroupMeta(n_used=n, achieved=diff, converged=False)
