"""T_nu on torus-invariant metrics over CP^n: monomial bases, coordinate
permutation symmetries, and the n-fold integral operator.

Sections of O(k) are spanned by the monomials w_i in the affine coordinates
z_1..z_n of total degree <= k, ordered first by degree and then
lexicographically (z_1 before z_2 before ...).  A torus-invariant metric is a
positive coefficient a_i per monomial, the matrix being diag(1/a_i).

One application maps

    1/a~_i  =  N n! Int_{(0,inf)^n} w_i(x) dx
               / ( (sum_p a_p w_p(x)) (1 + sum_q x_q)^(n+1) ),

with N = C(n+k, k).  The integral is taken in homogeneous coordinates
u_j = x_j / (1 + sum x), which turns the domain into the unit simplex and the
integrand into u^alpha s^(k-|alpha|) / D(u) with s = 1 - sum u and
D(u) = sum_p a_p u^beta_p s^(k-|beta_p|).  D is a positive combination of all
degree-k monomials in (s, u), hence bounded away from zero on the closed
simplex, so the integrand is analytic there and a Duffy-type tensor map onto
the unit box integrates it to near machine accuracy at small node counts.
The round (multinomial) metric makes D identically 1 and is fixed exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .errors import MetricError
from .quadrature import (
    DEFAULT_NODE_CAP,
    DEFAULT_START_NODES,
    gauss_legendre_unit,
    refine_by_doubling,
)

__all__ = [
    "MonomialBasis",
    "MultiIndexMetric",
    "SymmetryClassification",
    "build_basis",
    "permutation_action",
    "classify_symmetry",
    "apply_Tnu_cpn",
    "sigma_predict_cpn",
    "multinomial_coeffs",
    "full_symmetry_orbits",
    "metric_from_class_values",
    "DEFAULT_APPLY_TOL_CPN",
]

DEFAULT_APPLY_TOL_CPN = 1e-11

_SUPPORTED_N = (1, 2, 3)


@dataclass(frozen=True)
class MonomialBasis:
    """Exponent multi-indices of the monomials of degree <= k in n variables."""

    n: int
    k: int
    exponents: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.exponents)

    def position(self, alpha: tuple[int, ...]) -> int:
        return _position_map(self)[alpha]

    def degree(self, i: int) -> int:
        return sum(self.exponents[i])


@lru_cache(maxsize=None)
def _position_map(basis: MonomialBasis) -> dict[tuple[int, ...], int]:
    return {a: i for i, a in enumerate(basis.exponents)}


@lru_cache(maxsize=None)
def build_basis(n: int, k: int) -> MonomialBasis:
    """Monomial basis of H^0(CP^n, O(k)): N = C(n+k, k) multi-indices,
    sorted by total degree, then lexicographically with z_1 heaviest."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    exps: list[tuple[int, ...]] = []
    for d in range(k + 1):
        block = [
            alpha
            for alpha in itertools.product(range(d, -1, -1), repeat=n)
            if sum(alpha) == d
        ]
        block.sort(reverse=True)
        exps.extend(block)
    basis = MonomialBasis(n, k, tuple(exps))
    assert basis.size == comb(n + k, k)
    return basis


@dataclass(frozen=True, eq=False)
class MultiIndexMetric:
    """Positive coefficients a_i indexed by a monomial basis (matrix diag 1/a_i)."""

    basis: MonomialBasis
    coeffs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=float)
        if a.shape != (self.basis.size,):
            raise MetricError(
                f"expected {self.basis.size} coefficients, got shape {a.shape}"
            )
        if not np.all(np.isfinite(a)) or np.any(a <= 0.0):
            raise MetricError("coefficients must be finite and strictly positive")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "coeffs", a)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiIndexMetric):
            return NotImplemented
        return self.basis == other.basis and bool(np.all(self.coeffs == other.coeffs))


def permutation_action(basis: MonomialBasis, pi) -> np.ndarray:
    """Index permutation induced by the coordinate substitution Z_i -> Z_pi(i).

    Each affine multi-index is lifted to the homogeneous exponent vector
    (k - |alpha|, alpha), the positions are permuted, and the result projected
    back.  Returns the bijection as an integer array: entry i is the index of
    the monomial that w_i is carried to.
    """
    pi = tuple(pi)
    if sorted(pi) != list(range(basis.n + 1)):
        raise ValueError(f"not a permutation of 0..{basis.n}: {pi!r}")
    return _permutation_action_cached(basis, pi)


@lru_cache(maxsize=None)
def _permutation_action_cached(basis: MonomialBasis, pi: tuple[int, ...]) -> np.ndarray:
    inv = [0] * len(pi)
    for i, v in enumerate(pi):
        inv[v] = i
    out = np.empty(basis.size, dtype=np.intp)
    for i, alpha in enumerate(basis.exponents):
        beta = (basis.k - sum(alpha),) + alpha
        image = tuple(beta[inv[j]] for j in range(len(pi)))
        out[i] = basis.position(image[1:])
    out.flags.writeable = False
    return out


def _is_fixed_point_free(pi: tuple[int, ...]) -> bool:
    return all(pi[i] != i for i in range(len(pi)))


@dataclass(frozen=True)
class SymmetryClassification:
    """Invariance of a metric under homogeneous-coordinate permutations.

    ``orbits`` partitions the basis indices under the group of all invariant
    permutations; ``generally_symmetric`` records whether at least one
    invariant permutation moves every coordinate.
    """

    invariant_permutations: tuple[tuple[int, ...], ...]
    orbits: tuple[tuple[int, ...], ...]
    generally_symmetric: bool


def _orbits_from_maps(size: int, maps: list[np.ndarray]) -> tuple[tuple[int, ...], ...]:
    parent = list(range(size))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for mp in maps:
        for i in range(size):
            ri, rj = find(i), find(int(mp[i]))
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(size):
        groups.setdefault(find(i), []).append(i)
    return tuple(tuple(g) for _, g in sorted(groups.items()))


def classify_symmetry(metric: MultiIndexMetric, tol: float = 1e-12) -> SymmetryClassification:
    """Test invariance under each of the (n+1)! coordinate permutations.

    Invariance of coefficients is checked to relative tolerance tol; the orbit
    partition is taken under the subgroup of all invariant permutations.
    """
    basis = metric.basis
    a = metric.coeffs
    invariant: list[tuple[int, ...]] = []
    maps: list[np.ndarray] = []
    fixed_point_free = False
    for pi in itertools.permutations(range(basis.n + 1)):
        mp = permutation_action(basis, pi)
        if np.all(np.abs(a[mp] - a) <= tol * np.maximum(a[mp], a)):
            invariant.append(pi)
            maps.append(mp)
            if _is_fixed_point_free(pi):
                fixed_point_free = True
    return SymmetryClassification(
        invariant_permutations=tuple(invariant),
        orbits=_orbits_from_maps(basis.size, maps),
        generally_symmetric=fixed_point_free,
    )


def multinomial_coeffs(basis: MonomialBasis) -> np.ndarray:
    """Coefficients k!/((k-|a|)! a_1! ... a_n!) of the round metric (the
    unique T_nu fixed direction)."""
    k = basis.k
    out = np.empty(basis.size)
    for i, alpha in enumerate(basis.exponents):
        v = factorial(k) // factorial(k - sum(alpha))
        for e in alpha:
            v //= factorial(e)
        out[i] = float(v)
    return out


def full_symmetry_orbits(basis: MonomialBasis) -> tuple[tuple[int, ...], ...]:
    """Orbit partition of basis indices under the full group Sym(n+1),
    ordered by first occurrence (orbit representatives in basis order)."""
    maps = [
        permutation_action(basis, pi)
        for pi in itertools.permutations(range(basis.n + 1))
    ]
    return _orbits_from_maps(basis.size, maps)


def metric_from_class_values(basis: MonomialBasis, values) -> MultiIndexMetric:
    """Build a fully symmetric metric from one value per full-symmetry orbit.

    Values are matched to orbits in representative order; e.g. for n=3, k=4
    the five orbits are represented by 1, z1, z1^2, z1*z2, z1*z2*z3.
    """
    orbits = full_symmetry_orbits(basis)
    values = np.asarray(values, dtype=float)
    if values.shape != (len(orbits),):
        raise MetricError(
            f"expected {len(orbits)} class values for n={basis.n}, k={basis.k}, "
            f"got {values.size}"
        )
    coeffs = np.empty(basis.size)
    for orbit, v in zip(orbits, values):
        coeffs[list(orbit)] = v
    return MultiIndexMetric(basis, coeffs)


def _exact_invariance_orbits(metric: MultiIndexMetric) -> tuple[tuple[int, ...], ...]:
    """Orbits under permutations that fix the coefficients *bitwise*.

    Used to share integrals across symmetric coefficients; exact equality
    guarantees replication introduces no projection, and keeps iterates of a
    symmetric start exactly symmetric.
    """
    basis = metric.basis
    a = metric.coeffs
    maps = []
    for pi in itertools.permutations(range(basis.n + 1)):
        mp = permutation_action(basis, pi)
        if np.array_equal(a[mp], a):
            maps.append(mp)
    return _orbits_from_maps(basis.size, maps)


def _duffy_axis_exponents(alpha: tuple[int, ...], k: int, n: int,
                          with_jacobian: bool) -> list[tuple[int, int]]:
    """Per-axis (t-power, (1-t)-power) of the Duffy pullback of
    u^alpha s^(k-|alpha|) (times the Duffy Jacobian when requested)."""
    out = []
    partial = 0
    for axis in range(n):
        partial += alpha[axis]
        e_omt = k - partial
        if with_jacobian:
            e_omt += n - (axis + 1)
        out.append((alpha[axis], e_omt))
    return out


def _tensor_product(factors: list[np.ndarray]) -> np.ndarray:
    grid = factors[0]
    for f in factors[1:]:
        grid = np.multiply.outer(grid, f)
    return grid


def apply_Tnu_cpn(
    metric: MultiIndexMetric,
    tol: float = DEFAULT_APPLY_TOL_CPN,
    m0: int | None = None,
    m_cap: int | None = None,
) -> MultiIndexMetric:
    """One T_nu application on a torus-invariant metric over CP^n, n in 1..3.

    When the input is invariant under a subgroup of coordinate permutations,
    one integral is computed per orbit and replicated (the fully symmetric
    CP^3 degree-4 case needs 5 integrals instead of 35).
    """
    basis = metric.basis
    n, k = basis.n, basis.k
    if n not in _SUPPORTED_N:
        raise MetricError(f"unsupported dimension n={n}; this build handles n <= 3")
    if m0 is None:
        m0 = DEFAULT_START_NODES[n]
    if m_cap is None:
        m_cap = DEFAULT_NODE_CAP[n]
    N = basis.size
    amax = float(np.max(metric.coeffs))
    ah = metric.coeffs / amax
    orbits = _exact_invariance_orbits(metric)
    reps = [orbit[0] for orbit in orbits]

    denom_exp = [
        _duffy_axis_exponents(alpha, k, n, with_jacobian=False)
        for alpha in basis.exponents
    ]
    numer_exp = [
        _duffy_axis_exponents(basis.exponents[i], k, n, with_jacobian=True)
        for i in reps
    ]

    def evaluate(m: int) -> np.ndarray:
        t, omt, w = gauss_legendre_unit(m)
        max_e = k + n  # largest (1-t) exponent that occurs
        pt = t[None, :] ** np.arange(k + 1)[:, None]
        pomt = omt[None, :] ** np.arange(max_e + 1)[:, None]
        D = np.zeros((m,) * n)
        for p in range(N):
            D += ah[p] * _tensor_product(
                [pt[et] * pomt[eo] for (et, eo) in denom_exp[p]]
            )
        R = 1.0 / D
        vals = np.empty(len(reps))
        for idx, exps in enumerate(numer_exp):
            numer = _tensor_product([pt[et] * pomt[eo] * w for (et, eo) in exps])
            vals[idx] = np.sum(numer * R)
        return vals

    integrals, _ = refine_by_doubling(evaluate, tol, m0, m_cap)
    rep_out = amax / (N * factorial(n) * integrals)
    out = np.empty(N)
    for orbit, v in zip(orbits, rep_out):
        out[list(orbit)] = v
    return MultiIndexMetric(basis, out)


def sigma_predict_cpn(n: int, k: int, generally_symmetric: bool) -> float:
    """Predicted asymptotic convergence ratio of T_nu on CP^n.

    (k-1)k / ((k+n+1)(k+n+2)) for metrics invariant under a fixed-point-free
    coordinate permutation, else k / (k+n+1).  At n = 1 these are the
    palindromic and generic ratios on the projective line.
    """
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    if generally_symmetric:
        return (k - 1) * k / ((k + n + 1) * (k + n + 2))
    return k / (k + n + 1)
