"""Concrete finite-dimensional normed spaces with explicit duality maps.

Two kinds are supported: Euclidean (Hilbert) space, where the normalized
duality map is the identity and the strong-monotonicity constant is
exactly one, and finite-dimensional l^p space with real p >= 2, where the
duality map has the closed form

    J(x)_i = ||x||_p^(2-p) * |x_i|^(p-2) * x_i,   J(0) = 0,

and the strong-monotonicity constant M is supplied per scenario and
validated by sampling on a bounded region.  p < 2 is rejected: the
formula degenerates at zero coordinates and no sampled bound would be
trustworthy there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

_IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class MonotonicityReport:
    """Result of sampling <x-y, Jx-Jy> >= M ||x-y||^2 on a ball."""

    constant: float
    min_ratio: float
    samples: int
    radius: float
    passed: bool


@dataclass(frozen=True)
class SpaceContext:
    """Immutable description of the ambient space.

    ``kind`` is "hilbert" or "lp"; ``M`` is the strong-monotonicity
    constant of the duality map (1.0 exactly in the Hilbert case).
    """

    kind: str
    dim: int
    M: float = 1.0
    p: float = field(default=2.0)

    @staticmethod
    def hilbert(dim: int) -> "SpaceContext":
        if dim < 1:
            raise ValueError("dimension must be positive")
        return SpaceContext(kind="hilbert", dim=dim, M=1.0, p=2.0)

    @staticmethod
    def lp(dim: int, p: float, M: float) -> "SpaceContext":
        if dim < 1:
            raise ValueError("dimension must be positive")
        if p < 2.0:
            raise ValueError("p < 2 is not supported (duality map degenerates)")
        if M <= 0.0:
            raise ValueError("strong-monotonicity constant must be positive")
        return SpaceContext(kind="lp", dim=dim, M=M, p=float(p))

    # -- basic vector plumbing ------------------------------------------------

    def check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(
                f"expected vector of dimension {self.dim}, got shape {x.shape}"
            )
        return x

    def norm(self, x: np.ndarray) -> float:
        x = self.check(x)
        if self.kind == "hilbert":
            return float(np.linalg.norm(x))
        return float(np.linalg.norm(x, ord=self.p))

    def norms(self, rows: np.ndarray) -> np.ndarray:
        """Row-wise norms of an (n, dim) array."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise DimensionMismatch(f"expected (n, {self.dim}) array, got {rows.shape}")
        if self.kind == "hilbert":
            return np.linalg.norm(rows, axis=1)
        return np.linalg.norm(rows, ord=self.p, axis=1)

    def dual_norm(self, f: np.ndarray) -> float:
        f = self.check(f)
        if self.kind == "hilbert":
            return float(np.linalg.norm(f))
        q = self.p / (self.p - 1.0)
        return float(np.linalg.norm(f, ord=q))

    def dual_pair(self, f: np.ndarray, x: np.ndarray) -> float:
        """Finite-dimensional pairing <x, f>: the coordinate dot product."""
        f = self.check(f)
        x = self.check(x)
        return float(f @ x)

    def duality_map(self, x: np.ndarray) -> np.ndarray:
        """Normalized duality map: <x, Jx> = ||x||^2 and ||Jx||_* = ||x||."""
        x = self.check(x)
        if self.kind == "hilbert":
            return x.copy()
        nx = self.norm(x)
        if nx == 0.0:
            return np.zeros_like(x)
        return nx ** (2.0 - self.p) * np.abs(x) ** (self.p - 2.0) * x

    # -- validation -----------------------------------------------------------

    def check_duality_identities(self, x: np.ndarray, tol: float = _IDENTITY_TOL) -> bool:
        x = self.check(x)
        j = self.duality_map(x)
        nx = self.norm(x)
        scale = 1.0 + nx * nx
        return (
            abs(self.dual_pair(j, x) - nx * nx) <= tol * scale
            and abs(self.dual_norm(j) - nx) <= tol * (1.0 + nx)
        )

    def validate_strong_monotonicity(
        self,
        radius: float,
        samples: int = 10_000,
        rng: np.random.Generator | None = None,
    ) -> MonotonicityReport:
        """Sample pairs in the ball of ``radius`` and check the M-inequality.

        For the Hilbert kind the inequality is an identity with M = 1, so
        the report is a formality.  For lp the configured M is a scenario
        datum; the sampled minimum ratio certifies it on the region only.
        """
        if rng is None:
            rng = np.random.default_rng(0)
        min_ratio = np.inf
        for _ in range(samples):
            x = rng.uniform(-radius, radius, size=self.dim)
            y = rng.uniform(-radius, radius, size=self.dim)
            d = x - y
            nd = self.norm(d)
            if nd < 1e-9:
                continue
            gap = self.dual_pair(self.duality_map(x) - self.duality_map(y), d)
            min_ratio = min(min_ratio, gap / (nd * nd))
        passed = bool(min_ratio >= self.M - 1e-12)
        return MonotonicityReport(
            constant=self.M,
            min_ratio=float(min_ratio),
            samples=samples,
            radius=radius,
            passed=passed,
        )
