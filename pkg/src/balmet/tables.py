"""Benchmark tables and their regression machinery.

Four reference trajectories are embedded verbatim as golden data, at the
precision to which they are conventionally printed: the degree-2 T_K run,
the degree-3 T_nu run, the degree-6 T run whose first application moves the
metric *away* from its limit, and the fully symmetric degree-4 T_nu run on
CP^3.  ``reproduce`` regenerates a table from scratch and diffs it cell by
cell; tolerances combine the documented accuracy targets with half an ulp of
the printed precision, since the golden values are rounded.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cp1 import OperatorKind
from .cpn import build_basis, metric_from_class_values
from .dynamics import (
    NormalizationMode,
    build_trajectory,
    coordinate_sigma_series,
)
from .metrics import DiagonalMetric

__all__ = ["GoldenTable", "ReproduceReport", "CellDeviation", "TABLE_IDS",
           "golden_table", "generate_table", "reproduce"]


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    decimals: int      # printed decimals of the golden values
    rel_tol: float
    abs_tol: float

    def allowance(self, golden: float) -> float:
        return self.rel_tol * abs(golden) + self.abs_tol + 0.5 * 10.0 ** (-self.decimals)


@dataclass(frozen=True)
class GoldenTable:
    table_id: str
    description: str
    columns: tuple[ColumnSpec, ...]          # without the leading r column
    rows: tuple[tuple[float, ...], ...]      # each row starts with r
    runtime_budget_s: float


@dataclass(frozen=True)
class CellDeviation:
    r: int
    column: str
    computed: float
    golden: float
    deviation: float
    allowed: float


@dataclass(frozen=True)
class ReproduceReport:
    table_id: str
    column_names: tuple[str, ...]
    computed_rows: tuple[tuple[float, ...], ...]
    golden_rows: tuple[tuple[float, ...], ...]
    max_deviation: dict[str, float]
    failures: tuple[CellDeviation, ...]
    elapsed_s: float

    @property
    def ok(self) -> bool:
        return not self.failures


def _cols(names, decimals, rel, abs_):
    return tuple(ColumnSpec(n, decimals, rel, abs_) for n in names)


_TK_K2 = GoldenTable(
    table_id="tk-k2",
    description="T_K at k=2 from (1,17,36), scaled so the limit starts at 1",
    columns=_cols(("a0", "a1", "a2"), 4, 0.0, 1e-4)
    + _cols(("dist", "bnd"), 4, 0.0, 5e-4),
    rows=(
        (0, 0.8826, 15.0043, 31.7738, 0.2848, 1.0180),
        (1, 0.9738, 12.6377, 35.0561, 0.0640, 0.3027),
        (2, 0.9946, 12.1292, 35.8067, 0.0131, 0.0683),
        (3, 0.9989, 12.0259, 35.9612, 0.0026, 0.0140),
        (4, 0.9998, 12.0052, 35.9922, 0.0005, 0.0028),
        (5, 1.0000, 12.0010, 35.9984, 0.0001, 0.0006),
    ),
    runtime_budget_s=5.0,
)

_TNU_K3 = GoldenTable(
    table_id="tnu-k3",
    description="T_nu at k=3 from (1,25,0.07,13), limit (1,3,3,1)",
    columns=_cols(("a0", "a1", "a2", "a3"), 5, 0.0, 1e-4)
    + _cols(("dist", "bnd"), 5, 0.0, 5e-4),
    rows=(
        (0, 0.20720, 5.18011, 0.01450, 2.69366, 5.67338, 17.02014),
        (1, 0.57206, 2.68260, 3.45522, 1.58209, 0.74488, 16.50932),
        (2, 0.73295, 2.72858, 3.31411, 1.32528, 0.44129, 15.99849),
        (3, 0.83372, 2.82894, 3.18320, 1.18836, 0.26423, 15.48766),
        (4, 0.89777, 2.89557, 3.10812, 1.11040, 0.15845, 14.97684),
        (5, 0.93773, 2.93684, 3.06435, 1.06526, 0.09505, 14.46601),
        (10, 0.99505, 2.99505, 3.00496, 1.00497, 0.00739, 11.91189),
        (15, 0.99961, 2.99962, 3.00039, 1.00039, 0.00057, 9.35784),
        (20, 0.99997, 2.99997, 3.00003, 1.00003, 0.00004, 6.80474),
    ),
    runtime_budget_s=10.0,
)

_T_K6 = GoldenTable(
    table_id="t-k6",
    description="T at k=6 from the palindromic (1,6000,150000,2e10,...); "
    "the first application increases the distance",
    columns=_cols(("a0", "a1", "a2", "a3"), 5, 1e-3, 0.0)
    + _cols(("err", "bnd"), 5, 0.0, 5e-3),
    rows=(
        (0, 0.00010, 0.58903, 14.72580, 1963439.38600, 17.69856, 106.19139),
        (1, 0.00010, 0.48814, 1073.02459, 733382.16850, 18.10011, 106.00906),
        (2, 0.00011, 0.60722, 1196.93120, 414634.58830, 17.67812, 105.82674),
        (3, 0.00013, 0.72695, 1195.91914, 257759.72070, 17.21170, 105.64441),
        (4, 0.00016, 0.84269, 1147.31003, 167930.51810, 16.72422, 105.46208),
        (5, 0.00020, 0.95726, 1076.08572, 112611.11230, 16.22342, 105.27976),
        (10, 0.00068, 1.58083, 669.18359, 18910.93755, 13.62571, 104.36813),
        (20, 0.01002, 3.32601, 190.00391, 970.58975, 8.42894, 102.54488),
        (30, 0.11205, 5.07732, 52.17933, 117.34474, 3.98456, 100.72162),
        (40, 0.51092, 5.88292, 22.24884, 34.20518, 1.22538, 98.89836),
        (50, 0.87358, 5.99470, 16.26035, 22.28184, 0.24744, 97.07511),
        (60, 0.97741, 5.99984, 15.20684, 20.36883, 0.04187, 95.25185),
        (70, 0.99629, 6.00000, 15.03350, 20.05958, 0.00682, 93.42860),
        (80, 0.99940, 6.00000, 15.00541, 20.00962, 0.00110, 91.60534),
        (90, 0.99990, 6.00000, 15.00088, 20.00156, 0.00018, 89.78209),
        (100, 0.99998, 6.00000, 15.00014, 20.00025, 0.00003, 87.95883),
    ),
    runtime_budget_s=60.0,
)

_CPN_K4 = GoldenTable(
    table_id="cpn-k4",
    description="T_nu on CP^3 at k=4 from class values (1,20,30,40,50), "
    "each iterate scaled to first coefficient 1",
    columns=_cols(("a2", "a5", "a6", "a15"), 7, 0.0, 1e-3)
    + _cols(("sigma_tilde",), 4, 0.0, 5e-4),
    rows=(
        (0, 20.0000000, 30.0000000, 40.0000000, 50.0000000, 0.0000),
        (1, 4.3071170, 6.5967335, 13.0915039, 25.9850356, 0.0192),
        (2, 4.0344368, 6.0688663, 12.1588436, 24.3600437, 0.1121),
        (3, 4.0052604, 6.0105224, 12.0258597, 24.0613530, 0.1528),
        (4, 4.0008611, 6.0017223, 12.0042908, 24.0102741, 0.1637),
        (5, 4.0001430, 6.0002860, 12.0007145, 24.0017140, 0.1661),
        (6, 4.0000238, 6.0000476, 12.0001191, 24.0002857, 0.1665),
        (7, 4.0000040, 6.0000079, 12.0000198, 24.0000476, 0.1666),
        (8, 4.0000007, 6.0000013, 12.0000033, 24.0000079, 0.1667),
    ),
    runtime_budget_s=600.0,
)

_TABLES = {t.table_id: t for t in (_TK_K2, _TNU_K3, _T_K6, _CPN_K4)}
TABLE_IDS = tuple(_TABLES)


def golden_table(table_id: str) -> GoldenTable:
    if table_id not in _TABLES:
        raise ValueError(f"unknown table {table_id!r}; expected one of {TABLE_IDS}")
    return _TABLES[table_id]


def _cp1_table_rows(kind: OperatorKind, start, steps: int, record: list[int],
                    n_coeffs: int) -> list[tuple[float, ...]]:
    traj = build_trajectory(kind, DiagonalMetric(np.asarray(start, float)),
                            steps=steps,
                            normalization=NormalizationMode.BALANCED_FIRST)
    shown = traj.display_iterates()
    rows = []
    for r in record:
        coeffs = tuple(float(v) for v in shown[r].coeffs[:n_coeffs])
        rows.append((r,) + coeffs + (traj.err[r], traj.bound[r]))
    return rows


def generate_table(table_id: str) -> list[tuple[float, ...]]:
    """Recompute a golden table's rows from scratch."""
    table = golden_table(table_id)
    if table_id == "tk-k2":
        return _cp1_table_rows(OperatorKind.TK, (1.0, 17.0, 36.0), 5,
                               [int(r[0]) for r in table.rows], 3)
    if table_id == "tnu-k3":
        return _cp1_table_rows(OperatorKind.TNU, (1.0, 25.0, 0.07, 13.0), 20,
                               [int(r[0]) for r in table.rows], 4)
    if table_id == "t-k6":
        start = (1.0, 6000.0, 150000.0, 2e10, 150000.0, 6000.0, 1.0)
        return _cp1_table_rows(OperatorKind.T, start, 100,
                               [int(r[0]) for r in table.rows], 4)
    # cpn-k4
    basis = build_basis(3, 4)
    metric = metric_from_class_values(basis, (1.0, 20.0, 30.0, 40.0, 50.0))
    traj = build_trajectory(OperatorKind.TNU, metric, steps=8,
                            normalization=NormalizationMode.FIRST_COEFF)
    sig = coordinate_sigma_series(traj, coord=1)
    shown = traj.display_iterates()
    rows = []
    for r in range(9):
        coeffs = tuple(float(shown[r].coeffs[i]) for i in (1, 4, 5, 14))
        rows.append((r,) + coeffs + (sig[r],))
    return rows


def reproduce(table_id: str) -> ReproduceReport:
    """Regenerate a table and diff it against the golden data."""
    table = golden_table(table_id)
    t0 = time.perf_counter()
    computed = generate_table(table_id)
    elapsed = time.perf_counter() - t0
    failures: list[CellDeviation] = []
    max_dev = {c.name: 0.0 for c in table.columns}
    for crow, grow in zip(computed, table.rows):
        for j, col in enumerate(table.columns, start=1):
            dev = abs(crow[j] - grow[j])
            max_dev[col.name] = max(max_dev[col.name], dev)
            allowed = col.allowance(grow[j])
            if dev > allowed:
                failures.append(CellDeviation(int(grow[0]), col.name,
                                              crow[j], grow[j], dev, allowed))
    return ReproduceReport(
        table_id=table_id,
        column_names=tuple(c.name for c in table.columns),
        computed_rows=tuple(tuple(r) for r in computed),
        golden_rows=table.rows,
        max_deviation=max_dev,
        failures=tuple(failures),
        elapsed_s=elapsed,
    )
