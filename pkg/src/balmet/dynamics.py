"""Iteration driver: trajectories, balanced limits, error series, convergence
ratios, and the conjectured distance envelope.

Starting from any diagonal metric, repeated application of one of the maps
converges linearly to a balanced metric B.  The per-step distance ratio tends
to a constant sigma depending only on the operator, the degree, and (for
T_nu) whether the start is palindromic; the distance at step r is observed to
stay below log(1 + exp(k*d) * sigma^r) with d the initial distance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import log

import numpy as np

from . import cp1, cpn
from .errors import ConvergenceError, MetricError
from .metrics import DiagonalMetric, as_metric, distance, is_palindromic, scale
from .metrics import predict_balanced_direction_k2
from .cp1 import OperatorKind
from .cpn import MultiIndexMetric, classify_symmetry, sigma_predict_cpn

__all__ = [
    "NormalizationMode",
    "Trajectory",
    "apply_step",
    "iterate",
    "find_balanced",
    "build_trajectory",
    "error_series",
    "sigma_estimate",
    "coordinate_sigma_series",
    "sigma_closed_form",
    "bound_series",
    "contraction_witness",
    "DEFAULT_CONV_TOL",
    "DEFAULT_MAX_ITER",
    "DEFAULT_ERR_FLOOR",
]

DEFAULT_CONV_TOL = 1e-13
DEFAULT_MAX_ITER = 2000
DEFAULT_ERR_FLOOR = 1e-11


class NormalizationMode(enum.Enum):
    """Scaling convention for displayed iterates and error computation.

    NONE leaves iterates raw.  BALANCED_FIRST rescales every iterate and the
    balanced limit by one common factor so the limit's first coefficient is 1
    (distances are unchanged).  FIRST_COEFF rescales each iterate by its own
    first coefficient (and the limit likewise) before measuring distance.
    """

    NONE = "none"
    BALANCED_FIRST = "balanced"
    FIRST_COEFF = "first"

    @classmethod
    def parse(cls, name: str) -> "NormalizationMode":
        for mode in cls:
            if mode.value == name.strip().lower():
                return mode
        raise ValueError(f"unknown normalization {name!r}; "
                         f"expected none, balanced, or first")


def _rescaled(g, lam: float):
    if isinstance(g, MultiIndexMetric):
        return MultiIndexMetric(g.basis, g.coeffs * lam)
    return scale(g, lam)


def _first_normalized(g):
    return _rescaled(g, 1.0 / float(g.coeffs[0]))


def _metric_distance(a, b) -> float:
    if isinstance(a, MultiIndexMetric) or isinstance(b, MultiIndexMetric):
        if not (isinstance(a, MultiIndexMetric) and isinstance(b, MultiIndexMetric)
                and a.basis == b.basis):
            raise MetricError("metrics live on different bases")
        return float(np.sqrt(np.sum(np.log(b.coeffs / a.coeffs) ** 2)))
    return distance(a, b)


def apply_step(op, g, tol: float | None = None):
    """Apply one operator step, dispatching on the metric type.

    DiagonalMetric goes through the CP^1 maps; MultiIndexMetric supports the
    T_nu map only.
    """
    if isinstance(g, MultiIndexMetric):
        kind = OperatorKind.parse(op) if isinstance(op, str) else op
        if kind is not OperatorKind.TNU:
            raise MetricError("only the T_nu map is defined on CP^n metrics here")
        return cpn.apply_Tnu_cpn(g, tol=tol if tol is not None else cpn.DEFAULT_APPLY_TOL_CPN)
    return cp1.apply_operator(op, g, tol=tol if tol is not None else cp1.DEFAULT_APPLY_TOL)


def iterate(op, g0, steps: int, tol: float | None = None) -> list:
    """The orbit [g0, F(g0), ..., F^steps(g0)].

    Operator failures propagate; the failing step index is attached to the
    exception as ``step_index``.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    out = [g0 if isinstance(g0, MultiIndexMetric) else as_metric(g0)]
    for r in range(steps):
        try:
            out.append(apply_step(op, out[-1], tol=tol))
        except Exception as exc:
            exc.step_index = r
            raise
    return out


def find_balanced(op, g0, conv_tol: float = DEFAULT_CONV_TOL,
                  max_iter: int = DEFAULT_MAX_ITER, tol: float | None = None):
    """Iterate the operator to numerical convergence; return the last iterate.

    Convergence is declared when successive first-coefficient-normalized
    iterates are closer than conv_tol.  For the degree-2 T and T_K maps the
    result is cross-checked against the closed-form limit direction
    (a_0, 2 sqrt(a_0 a_2), a_2), which those maps conserve.
    """
    cur = g0 if isinstance(g0, MultiIndexMetric) else as_metric(g0)
    step = float("inf")
    for _ in range(max_iter):
        nxt = apply_step(op, cur, tol=tol)
        step = _metric_distance(_first_normalized(cur), _first_normalized(nxt))
        cur = nxt
        if step < conv_tol:
            break
    else:
        raise ConvergenceError(
            f"no balanced limit within {max_iter} iterations "
            f"(last step size {step:.3e})",
            last=cur, step_size=step,
        )
    if isinstance(cur, DiagonalMetric) and cur.k == 2:
        kind = OperatorKind.parse(op) if isinstance(op, str) else op
        if kind in (OperatorKind.T, OperatorKind.TK):
            predicted = _first_normalized(predict_balanced_direction_k2(as_metric(g0)))
            got = _first_normalized(cur)
            dev = float(np.max(np.abs(got.coeffs / predicted.coeffs - 1.0)))
            if dev > 1e-6:
                raise ConvergenceError(
                    f"degree-2 limit deviates from the conserved direction by {dev:.3e}",
                    last=cur, step_size=step,
                )
    return cur


@dataclass(frozen=True)
class Trajectory:
    """An operator orbit together with its distance-to-balanced bookkeeping.

    ``iterates`` are raw (un-normalized); ``err`` and ``bound`` follow the
    trajectory's normalization mode; ``sigma_tilde`` holds the successive
    error ratios err_{r+1}/err_r (NaN where the denominator is 0).
    """

    operator: str
    iterates: tuple
    balanced: object
    normalization: NormalizationMode
    err: tuple[float, ...]
    sigma_tilde: tuple[float, ...]
    bound: tuple[float, ...]
    sigma_predicted: float
    d: float
    k: int

    @property
    def steps(self) -> int:
        return len(self.iterates) - 1

    def display_iterates(self) -> list:
        """Iterates under the trajectory's normalization convention."""
        return [_normalize_against(g, self.balanced, self.normalization)
                for g in self.iterates]

    def display_balanced(self):
        if self.normalization is NormalizationMode.NONE:
            return self.balanced
        return _first_normalized(self.balanced)


def _normalize_against(g, balanced, mode: NormalizationMode):
    if mode is NormalizationMode.NONE:
        return g
    if mode is NormalizationMode.BALANCED_FIRST:
        return _rescaled(g, 1.0 / float(balanced.coeffs[0]))
    return _first_normalized(g)


def _err_against(g, balanced, mode: NormalizationMode) -> float:
    if mode is NormalizationMode.FIRST_COEFF:
        return _metric_distance(_first_normalized(g), _first_normalized(balanced))
    return _metric_distance(g, balanced)


def _sigma_for(op, g0) -> float:
    if isinstance(g0, MultiIndexMetric):
        sym = classify_symmetry(g0).generally_symmetric
        return sigma_predict_cpn(g0.basis.n, g0.basis.k, sym)
    kind = OperatorKind.parse(op) if isinstance(op, str) else op
    return sigma_closed_form(kind, g0.k, palindromic=is_palindromic(g0))


def build_trajectory(op, g0, steps: int,
                     normalization: NormalizationMode | str = NormalizationMode.BALANCED_FIRST,
                     tol: float | None = None,
                     balanced=None,
                     conv_tol: float = DEFAULT_CONV_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> Trajectory:
    """Run ``steps`` applications and assemble the full Trajectory record.

    The balanced limit is resolved once by continuing the iteration from the
    final step (or taken from ``balanced`` if supplied) and every recorded
    error is measured against it.
    """
    if isinstance(normalization, str):
        normalization = NormalizationMode.parse(normalization)
    kind = OperatorKind.parse(op) if isinstance(op, str) else op
    iterates = iterate(kind, g0, steps, tol=tol)
    if balanced is None:
        balanced = find_balanced(kind, iterates[-1], conv_tol=conv_tol,
                                 max_iter=max_iter, tol=tol)
    errs = tuple(_err_against(g, balanced, normalization) for g in iterates)
    ratios = tuple(
        errs[r + 1] / errs[r] if errs[r] > 0.0 else float("nan")
        for r in range(len(errs) - 1)
    )
    g_first = iterates[0]
    k = g_first.basis.k if isinstance(g_first, MultiIndexMetric) else g_first.k
    sigma = _sigma_for(kind, g_first)
    d = errs[0]
    bounds = tuple(
        float(np.logaddexp(0.0, k * d + r * log(sigma))) if sigma > 0.0
        else float(np.logaddexp(0.0, k * d) if r == 0 else 0.0)
        for r in range(len(errs))
    )
    return Trajectory(
        operator=kind.value,
        iterates=tuple(iterates),
        balanced=balanced,
        normalization=normalization,
        err=errs,
        sigma_tilde=ratios,
        bound=bounds,
        sigma_predicted=sigma,
        d=d,
        k=k,
    )


def error_series(traj: Trajectory) -> list[float]:
    """Distances to the balanced limit, one per recorded iterate."""
    return list(traj.err)


def sigma_estimate(traj: Trajectory, err_floor: float = DEFAULT_ERR_FLOOR) -> float:
    """Latest ratio err_{r+1}/err_r whose numerator exceeds the numeric floor.

    Ratios of distances below the floor are quadrature noise and are ignored.
    Requires at least 3 iterates above the floor.
    """
    errs = traj.err
    usable = [r for r in range(len(errs)) if errs[r] > err_floor]
    if len(usable) < 3:
        raise ConvergenceError(
            f"only {len(usable)} iterates above the error floor {err_floor:g}; "
            "need at least 3 for a ratio estimate"
        )
    r_last = usable[-1]
    if r_last == 0:
        raise ConvergenceError("no usable ratio: trajectory starts at the floor")
    return errs[r_last] / errs[r_last - 1]


def coordinate_sigma_series(traj: Trajectory, coord: int = 1) -> list[float]:
    """Per-step ratio (a_{j,r} - b_j)/(a_{j,r-1} - b_j) of one tracked
    coordinate's deviation from its limit, under the trajectory normalization.

    Converges to the same limit as the distance ratios; this is the estimator
    used alongside first-coefficient normalization.  Entry r=0 is 0 by
    convention.
    """
    its = traj.display_iterates()
    b = float(traj.display_balanced().coeffs[coord])
    devs = [float(g.coeffs[coord]) - b for g in its]
    out = [0.0]
    for r in range(1, len(devs)):
        out.append(devs[r] / devs[r - 1] if devs[r - 1] != 0.0 else float("nan"))
    return out


def sigma_probe(op, g0, err_floor: float = DEFAULT_ERR_FLOOR,
                tol: float | None = None, max_steps: int = 300,
                conv_tol: float = DEFAULT_CONV_TOL,
                max_iter: int = DEFAULT_MAX_ITER) -> tuple[float, int]:
    """Estimate the asymptotic distance ratio by iterating until the error
    drops to the numeric floor.

    Errors are measured under first-coefficient normalization (scale-free, so
    the estimate is insensitive to the limit's overall scale).  Returns
    (sigma_hat, steps_used) where sigma_hat is the latest ratio whose
    numerator exceeds err_floor.
    """
    g0 = g0 if isinstance(g0, MultiIndexMetric) else as_metric(g0)
    balanced = find_balanced(op, g0, conv_tol=conv_tol, max_iter=max_iter, tol=tol)
    bal_n = _first_normalized(balanced)
    errs = [_metric_distance(_first_normalized(g0), bal_n)]
    cur = g0
    while len(errs) <= max_steps and errs[-1] > err_floor:
        cur = apply_step(op, cur, tol=tol)
        errs.append(_metric_distance(_first_normalized(cur), bal_n))
    above = [r for r in range(len(errs)) if errs[r] > err_floor]
    if len(above) < 3 or above[-1] == 0:
        raise ConvergenceError(
            "trajectory reached the error floor too quickly for a ratio estimate"
        )
    r = above[-1]
    return errs[r] / errs[r - 1], r


def sigma_closed_form(op, k: int, palindromic: bool = False) -> float:
    """Asymptotic distance-ratio laws on the projective line.

    T_nu: (k-1)k/((k+2)(k+3)) from a palindromic start, else k/(k+2).
    T:    (k-1)(k+6)/((k+2)(k+3)).
    T_K:  (k-1)/(k+3).
    The palindromic flag is irrelevant for T and T_K.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    kind = OperatorKind.parse(op) if isinstance(op, str) else op
    if kind is OperatorKind.TNU:
        if palindromic:
            return (k - 1) * k / ((k + 2) * (k + 3))
        return k / (k + 2)
    if kind is OperatorKind.T:
        return (k - 1) * (k + 6) / ((k + 2) * (k + 3))
    return (k - 1) / (k + 3)


def bound_series(traj: Trajectory) -> list[tuple[float, float, bool]]:
    """(err_r, bnd_r, err_r < bnd_r) per step, with the conjectured envelope
    bnd_r = log(1 + exp(k d) sigma^r), d the initial distance."""
    return [
        (e, b, bool(e < b))
        for e, b in zip(traj.err, traj.bound)
    ]


def contraction_witness(op, g, tol: float | None = None,
                        err_floor: float = DEFAULT_ERR_FLOOR,
                        conv_tol: float = DEFAULT_CONV_TOL,
                        max_iter: int = DEFAULT_MAX_ITER) -> tuple[float, float, bool]:
    """Distances to the balanced limit before and after one application.

    Returns (err_0, err_1, increased).  The flag is only raised when err_1
    exceeds the numeric floor; sub-floor wiggle at a fixed point is noise, not
    expansion.
    """
    traj = build_trajectory(op, g, steps=1, tol=tol,
                            conv_tol=conv_tol, max_iter=max_iter)
    e0, e1 = traj.err[0], traj.err[1]
    return e0, e1, bool(e1 > e0 and e1 > err_floor)
