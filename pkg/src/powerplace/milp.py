"""Generic mixed-integer linear model: named variables, tagged rows, objective."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    is_binary: bool = False
    priority: int = 0  # lower = rounded earlier by dive heuristics


@dataclass
class Row:
    coeffs: dict[int, float]
    sense: str        # "<=", ">=", "=="
    rhs: float
    tag: str


@dataclass
class LpArrays:
    """Cached standard-form arrays for the LP backend.

    All ">=" rows are negated into "<=" form; `ub_rows` / `eq_rows` map matrix
    rows back to model row indices.
    """

    c: np.ndarray
    a_ub: sparse.csr_matrix | None
    b_ub: np.ndarray
    ub_rows: list[int]
    a_eq: sparse.csr_matrix | None
    b_eq: np.ndarray
    eq_rows: list[int]
    lb: np.ndarray
    ub: np.ndarray


class MilpModel:
    """Linear model with binary variables, built row by row.

    Every row carries a stable tag of the form "eq<k>/<level>/<subject>/<row>"
    used in exports and diagnostics.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self.objective_constant: float = 0.0
        # quadratic objective terms (i, j, coeff) meaning coeff * x_i * x_j;
        # only consumed by the exchange-file writer
        self.quadratic: list[tuple[int, int, float]] = []
        # optional heuristic metadata: groups of binaries that form natural
        # joint-move neighborhoods (solvers may ignore them)
        self.move_groups: list[list[int]] = []
        self._index: dict[str, int] = {}
        self._arrays: LpArrays | None = None

    def clone_with_bounds(self, overrides: dict[int, tuple[float, float]]) -> "MilpModel":
        """Copy sharing rows and objective, with some variable bounds replaced."""
        clone = MilpModel(self.name)
        clone.rows = self.rows
        clone.objective = self.objective
        clone.objective_constant = self.objective_constant
        clone.quadratic = self.quadratic
        clone.move_groups = self.move_groups
        clone._index = self._index
        clone.variables = [Variable(v.name, *overrides.get(i, (v.lb, v.ub)),
                                    v.is_binary, v.priority)
                           for i, v in enumerate(self.variables)]
        return clone

    def add_variable(self, name: str, lb: float, ub: float,
                     binary: bool = False, priority: int = 0) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable name {name!r}")
        if binary and not (0 <= lb <= ub <= 1):
            raise ValueError(f"binary {name!r} needs bounds within [0, 1]")
        if lb > ub:
            raise ValueError(f"variable {name!r} has empty bounds [{lb}, {ub}]")
        self.variables.append(Variable(name, float(lb), float(ub), binary, priority))
        self._index[name] = len(self.variables) - 1
        self._arrays = None
        return len(self.variables) - 1

    def index_of(self, name: str) -> int:
        return self._index[name]

    def add_row(self, coeffs: dict[int, float], sense: str, rhs: float,
                tag: str) -> int:
        if sense not in ("<=", ">=", "=="):
            raise ValueError(f"unknown sense {sense!r}")
        clean = {i: float(c) for i, c in coeffs.items() if c != 0.0}
        for i, c in clean.items():
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient in row {tag!r}")
            if not 0 <= i < len(self.variables):
                raise ValueError(f"unknown variable index {i} in row {tag!r}")
        if not math.isfinite(rhs):
            raise ValueError(f"non-finite rhs in row {tag!r}")
        self.rows.append(Row(clean, sense, float(rhs), tag))
        self._arrays = None
        return len(self.rows) - 1

    def add_objective(self, index: int, coeff: float) -> None:
        self.objective[index] = self.objective.get(index, 0.0) + float(coeff)
        self._arrays = None

    def binary_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.is_binary]

    @property
    def has_quadratic(self) -> bool:
        return bool(self.quadratic)

    def pure_binary_rows(self) -> list[tuple[dict[int, float], str, float]]:
        """Rows whose variables are all binaries; used for cheap pre-checks."""
        binset = set(self.binary_indices())
        return [(r.coeffs, r.sense, r.rhs) for r in self.rows
                if r.coeffs and set(r.coeffs) <= binset]

    def lp_arrays(self) -> LpArrays:
        if self._arrays is not None:
            return self._arrays
        n = len(self.variables)
        c = np.zeros(n)
        for i, v in self.objective.items():
            c[i] = v
        ub_data: list[tuple[dict[int, float], float, int]] = []
        eq_data: list[tuple[dict[int, float], float, int]] = []
        for ri, row in enumerate(self.rows):
            if row.sense == "==":
                eq_data.append((row.coeffs, row.rhs, ri))
            elif row.sense == "<=":
                ub_data.append((row.coeffs, row.rhs, ri))
            else:
                neg = {i: -v for i, v in row.coeffs.items()}
                ub_data.append((neg, -row.rhs, ri))

        def build(entries):
            if not entries:
                return None, np.zeros(0), []
            rows_idx, cols, vals, rhs, back = [], [], [], [], []
            for k, (coeffs, b, ri) in enumerate(entries):
                for i, v in coeffs.items():
                    rows_idx.append(k)
                    cols.append(i)
                    vals.append(v)
                rhs.append(b)
                back.append(ri)
            mat = sparse.csr_matrix((vals, (rows_idx, cols)),
                                    shape=(len(entries), n))
            return mat, np.array(rhs), back

        a_ub, b_ub, ub_rows = build(ub_data)
        a_eq, b_eq, eq_rows = build(eq_data)
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        self._arrays = LpArrays(c, a_ub, b_ub, ub_rows, a_eq, b_eq, eq_rows, lb, ub)
        return self._arrays

    def row_activity(self, x: np.ndarray, row: Row) -> float:
        return sum(c * x[i] for i, c in row.coeffs.items())

    def stats(self) -> dict[str, int]:
        return {
            "variables": len(self.variables),
            "binaries": len(self.binary_indices()),
            "rows": len(self.rows),
        }
