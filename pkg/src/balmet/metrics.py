"""Diagonal Hermitian metrics on sections over the projective line.

A metric is stored as the positive coefficient vector (a_0, ..., a_k); the
underlying (k+1)x(k+1) Hermitian matrix is diagonal with entries 1/a_q.
Geometry on the space of such metrics is flat in log coordinates: the
geodesic distance between A and B is the Euclidean norm of log(b_i/a_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import MetricError

__all__ = [
    "DiagonalMetric",
    "BalancedFamily",
    "as_metric",
    "distance",
    "scale",
    "reverse",
    "is_palindromic",
    "balanced_coeffs",
    "predict_balanced_direction_k2",
    "trace_relation",
]


def _validated_coeffs(values) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise MetricError("coefficients must form a non-empty 1-d sequence")
    if not np.all(np.isfinite(a)):
        raise MetricError("coefficients must be finite")
    if np.any(a <= 0.0):
        raise MetricError("coefficients must be strictly positive")
    a = a.copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DiagonalMetric:
    """Positive coefficients (a_0, ..., a_k) of a diagonal metric of degree k."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _validated_coeffs(self.coeffs))

    @property
    def k(self) -> int:
        return self.coeffs.size - 1

    def __len__(self) -> int:
        return self.coeffs.size

    def __getitem__(self, q: int) -> float:
        return float(self.coeffs[q])

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiagonalMetric):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(
            np.all(self.coeffs == other.coeffs)
        )

    def __repr__(self) -> str:
        vals = ", ".join(f"{v:g}" for v in self.coeffs)
        return f"DiagonalMetric(({vals}))"


def as_metric(g) -> DiagonalMetric:
    """Coerce a coefficient sequence to a validated DiagonalMetric."""
    return g if isinstance(g, DiagonalMetric) else DiagonalMetric(np.asarray(g, float))


def _pair(a, b) -> tuple[DiagonalMetric, DiagonalMetric]:
    a, b = as_metric(a), as_metric(b)
    if a.k != b.k:
        raise MetricError(f"degree mismatch: {a.k} != {b.k}")
    return a, b


def distance(a, b) -> float:
    """Geodesic distance sqrt(sum_i log(b_i/a_i)^2) between same-degree metrics."""
    a, b = _pair(a, b)
    return float(np.sqrt(np.sum(np.log(b.coeffs / a.coeffs) ** 2)))


def scale(g, lam: float) -> DiagonalMetric:
    """Uniformly rescale all coefficients by lam > 0."""
    g = as_metric(g)
    if not np.isfinite(lam) or lam <= 0.0:
        raise MetricError(f"scale factor must be positive, got {lam!r}")
    return DiagonalMetric(g.coeffs * lam)


def reverse(g) -> DiagonalMetric:
    """Coefficient reversal (a_0,...,a_k) -> (a_k,...,a_0), i.e. z -> 1/z."""
    g = as_metric(g)
    return DiagonalMetric(g.coeffs[::-1])


def is_palindromic(g, tol: float = 1e-12) -> bool:
    """True when a_i matches a_{k-i} for all i, to relative tolerance tol.

    Iterates of an exactly palindromic start stay palindromic only up to
    quadrature error, hence the tolerance; tol=0 demands exact equality.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    a = as_metric(g).coeffs
    b = a[::-1]
    return bool(np.all(np.abs(a - b) <= tol * np.maximum(a, b)))


@dataclass(frozen=True)
class BalancedFamily:
    """The two-parameter family a_q = alpha * c^q * C(k,q), alpha, c > 0.

    Every member is fixed by the T and T_K maps; only c = 1 (the round
    metric) is fixed by T_nu.
    """

    k: int
    alpha: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.k < 0 or self.k != int(self.k):
            raise MetricError("degree k must be a nonnegative integer")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise MetricError("alpha must be positive")
        if not (np.isfinite(self.c) and self.c > 0):
            raise MetricError("c must be positive")


def balanced_coeffs(family: BalancedFamily) -> DiagonalMetric:
    """Expand a BalancedFamily into its coefficient vector."""
    k = family.k
    coeffs = [family.alpha * family.c**q * comb(k, q) for q in range(k + 1)]
    return DiagonalMetric(np.array(coeffs))


def predict_balanced_direction_k2(g) -> DiagonalMetric:
    """Direction of the balanced limit of a degree-2 metric under T or T_K.

    The ratio a_2/a_0 is conserved by both maps at k = 2, which pins the
    limit to (a_0, 2*sqrt(a_0*a_2), a_2) up to overall scale.
    """
    g = as_metric(g)
    if g.k != 2:
        raise MetricError(f"prediction requires degree 2, got k={g.k}")
    a0, _, a2 = g.coeffs
    return DiagonalMetric(np.array([a0, 2.0 * np.sqrt(a0 * a2), a2]))


def trace_relation(g, g_next) -> float:
    """sum_i a_i / a~_i for same-degree metrics.

    Equals k+1 (up to quadrature tolerance) whenever g_next is the image of g
    under any of the three operator maps.
    """
    g, g_next = _pair(g, g_next)
    return float(np.sum(g.coeffs / g_next.coeffs))
