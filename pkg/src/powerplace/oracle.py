"""Independent ground truth: geometric orientation simulation and brute force.

The orientation simulator applies the port transform exactly as the binding
rows of the big-M port constraints dictate: mirror the default offsets across
the vertical (m) and horizontal (n) centerlines, then quarter-turn the box
clockwise when r = 1. Everything else in the package that reasons about
orientations is tested against this module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import Edge

_PQ_TARGET = {(0, 0): Edge.TOP, (0, 1): Edge.BOTTOM,
              (1, 0): Edge.RIGHT, (1, 1): Edge.LEFT}


@dataclass(frozen=True)
class OrientationState:
    m: int
    n: int
    r: int


ALL_STATES = tuple(OrientationState(m, n, r)
                   for m, n, r in itertools.product((0, 1), repeat=3))


def transform_offset(offset: tuple[float, float],
                     state: OrientationState) -> tuple[float, float]:
    """Port offset after applying (m, n, r) to the default offset."""
    a0, b0 = offset
    am = a0 * (1 - 2 * state.m)
    bn = b0 * (1 - 2 * state.n)
    if state.r:
        return (bn, -am)
    return (am, bn)


def transform_edge(edge: Edge, state: OrientationState) -> Edge:
    """Boundary edge after applying (m, n, r)."""
    out = edge.mirrored_lr() if state.m else edge
    out = out.mirrored_tb() if state.n else out
    return out.rotated_cw() if state.r else out


def simulate_orientation(default_edge: Edge, offset: tuple[float, float],
                         dims: tuple[float, float], state: OrientationState
                         ) -> tuple[Edge, tuple[float, float], tuple[float, float]]:
    """Resulting (edge, offset, dims) for a boundary port under (m, n, r).

    Raises ValueError when the default offset does not sit on the stated edge.
    """
    a0, b0 = offset
    w0, l0 = dims
    eps = 1e-9 * max(1.0, w0, l0)
    on_edge = {
        Edge.RIGHT: abs(a0 - w0 / 2) <= eps and abs(b0) <= l0 / 2 + eps,
        Edge.LEFT: abs(a0 + w0 / 2) <= eps and abs(b0) <= l0 / 2 + eps,
        Edge.TOP: abs(b0 - l0 / 2) <= eps and abs(a0) <= w0 / 2 + eps,
        Edge.BOTTOM: abs(b0 + l0 / 2) <= eps and abs(a0) <= w0 / 2 + eps,
    }[default_edge]
    if not on_edge:
        raise ValueError(f"port not on boundary: offset {offset} is not on the "
                         f"{default_edge.value} edge of a {w0} x {l0} box")
    new_dims = (l0, w0) if state.r else (w0, l0)
    return transform_edge(default_edge, state), transform_offset(offset, state), new_dims


def placement_target(p: int, q: int, perspective: str = "ego") -> Edge:
    """Edge a connected port must face for relative placement (p, q).

    (0,0): the second pair element sits above the first, (0,1) below,
    (1,0) right, (1,1) left. The connecting perspective faces the opposite
    way (a 180-degree change of viewpoint).
    """
    target = _PQ_TARGET[(p, q)]
    if perspective == "connecting":
        return target.opposite()
    if perspective != "ego":
        raise ValueError(f"unknown perspective {perspective!r}")
    return target


@dataclass(frozen=True)
class TableEntry:
    """Required orientation values; None marks a free binary."""

    m: int | None
    n: int | None
    r: int | None

    def admits(self, state: OrientationState) -> bool:
        return ((self.m is None or self.m == state.m)
                and (self.n is None or self.n == state.n)
                and (self.r is None or self.r == state.r))


def regenerate_truth_tables() -> dict[str, dict[Edge, dict[tuple[int, int], TableEntry]]]:
    """Derive the orientation requirement tables by exhaustive search.

    For every perspective, default port edge, and relative placement (p, q),
    searches the eight orientation states for those that put the port on the
    required facing edge, and reduces them to forced values plus free binaries.
    """
    tables: dict[str, dict[Edge, dict[tuple[int, int], TableEntry]]] = {}
    for perspective in ("ego", "connecting"):
        per_edge: dict[Edge, dict[tuple[int, int], TableEntry]] = {}
        for edge in Edge:
            column: dict[tuple[int, int], TableEntry] = {}
            for p, q in itertools.product((0, 1), repeat=2):
                target = placement_target(p, q, perspective)
                valid = [s for s in ALL_STATES if transform_edge(edge, s) == target]
                values = {}
                for name in ("m", "n", "r"):
                    seen = {getattr(s, name) for s in valid}
                    values[name] = seen.pop() if len(seen) == 1 else None
                column[(p, q)] = TableEntry(**values)
            per_edge[edge] = column
        tables[perspective] = per_edge
    return tables


# Hand-transcribed legacy variants of the ego requirements that circulate with
# this formulation; kept only so discrepancies against the geometric
# derivation can be surfaced. Entries are (m, n, r) with None = free.
LEGACY_EGO_TABLE: dict[Edge, dict[tuple[int, int], TableEntry]] = {
    Edge.TOP: {(0, 0): TableEntry(None, 0, 0), (0, 1): TableEntry(None, 1, 0),
               (1, 0): TableEntry(None, 0, 1), (1, 1): TableEntry(None, 1, 1)},
    Edge.BOTTOM: {(0, 0): TableEntry(None, 1, 0), (0, 1): TableEntry(None, 0, 0),
                  (1, 0): TableEntry(None, 1, 1), (1, 1): TableEntry(None, 0, 1)},
    Edge.RIGHT: {(0, 0): TableEntry(1, None, 1), (0, 1): TableEntry(0, None, 1),
                 (1, 0): TableEntry(0, None, 0), (1, 1): TableEntry(1, None, 0)},
    Edge.LEFT: {(0, 0): TableEntry(0, None, 1), (0, 1): TableEntry(1, None, 1),
                (1, 0): TableEntry(1, None, 0), (1, 1): TableEntry(1, None, 0)},
}

# A legacy four-row encoding for the right-edge m requirement that evaluates
# to XOR(p, q) instead of the XNOR the geometry requires.
LEGACY_RIGHT_EDGE_M = {(p, q): p ^ q for p, q in itertools.product((0, 1), repeat=2)}


@dataclass(frozen=True)
class Erratum:
    where: str
    legacy: str
    derived: str


def transcription_errata() -> list[Erratum]:
    """Cells where the legacy transcriptions contradict the geometric truth."""
    derived = regenerate_truth_tables()["ego"]
    errata: list[Erratum] = []
    for edge in Edge:
        for pq, legacy in LEGACY_EGO_TABLE[edge].items():
            if legacy != derived[edge][pq]:
                errata.append(Erratum(
                    where=f"table entry (p,q)=({pq[0]},{pq[1]}) / {edge.value}",
                    legacy=_fmt(legacy), derived=_fmt(derived[edge][pq])))
    xnor = {pq: 1 - (pq[0] ^ pq[1]) for pq in LEGACY_RIGHT_EDGE_M}
    derived_right = {pq: derived[Edge.RIGHT][pq].m for pq in LEGACY_RIGHT_EDGE_M}
    if derived_right == xnor and LEGACY_RIGHT_EDGE_M != xnor:
        errata.append(Erratum(
            where="right-edge m encoding",
            legacy="m = XOR(p, q)", derived="m = XNOR(p, q)"))
    return errata


def _fmt(e: TableEntry) -> str:
    def s(v):
        return "~" if v is None else str(v)
    return f"({s(e.m)},{s(e.n)},{s(e.r)})"


def format_truth_tables() -> str:
    """Printable rendering of the regenerated tables and the errata."""
    tables = regenerate_truth_tables()
    lines = []
    for perspective in ("ego", "connecting"):
        lines.append(f"required (m,n,r) per placement, {perspective} perspective"
                     " (~ marks a free binary):")
        header = f"  {'(p,q)':8s}" + "".join(f"{e.value:>12s}" for e in Edge)
        lines.append(header)
        for p, q in itertools.product((0, 1), repeat=2):
            row = f"  ({p},{q})   "
            for edge in Edge:
                row += f"{_fmt(tables[perspective][edge][(p, q)]):>12s}"
            lines.append(row)
        lines.append("")
    errata = transcription_errata()
    lines.append("known transcription errata (legacy -> derived):")
    for err in errata:
        lines.append(f"  {err.where}: {err.legacy} -> {err.derived}")
    return "\n".join(lines)


class EnumerationCapExceeded(ValueError):
    pass


@dataclass
class EnumerationResult:
    status: str                      # "optimal" | "infeasible"
    objective: float | None
    assignment: np.ndarray | None    # full variable vector of the best point
    feasible: list[tuple[tuple[int, ...], float]]   # (binary values, objective)
    optimal_assignments: list[tuple[int, ...]]
    binary_indices: list[int]


def enumerate_optimal(model, cap: int = 24, tie_tol: float = 1e-6) -> EnumerationResult:
    """Solve the LP for every assignment of the free binaries.

    Ground truth for small models; refuses more than `cap` free binaries.
    """
    from . import solver

    arrays = model.lp_arrays()
    free = [i for i in model.binary_indices()
            if model.variables[i].lb != model.variables[i].ub]
    fixed = {i: model.variables[i].lb for i in model.binary_indices()
             if model.variables[i].lb == model.variables[i].ub}
    if len(free) > cap:
        raise EnumerationCapExceeded(
            f"{len(free)} free binaries exceed the enumeration cap of {cap}")

    binary_rows = model.pure_binary_rows()
    best: float | None = None
    best_x: np.ndarray | None = None
    feasible: list[tuple[tuple[int, ...], float]] = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        values = dict(fixed)
        values.update(zip(free, bits))
        ok = True
        for coeffs, sense, rhs in binary_rows:
            lhs = sum(c * values[i] for i, c in coeffs.items())
            if (sense == "<=" and lhs > rhs + 1e-9) or \
               (sense == ">=" and lhs < rhs - 1e-9) or \
               (sense == "==" and abs(lhs - rhs) > 1e-9):
                ok = False
                break
        if not ok:
            continue
        overrides = {i: (float(v), float(v)) for i, v in values.items()}
        lp = solver.solve_lp(model, bound_overrides=overrides, arrays=arrays)
        if lp.status != "optimal":
            continue
        feasible.append((bits, lp.objective))
        if best is None or lp.objective < best - 1e-12:
            best = lp.objective
            best_x = lp.x
    if best is None:
        return EnumerationResult("infeasible", None, None, [], [], free)
    ties = [bits for bits, obj in feasible
            if obj <= best + tie_tol * max(1.0, abs(best))]
    return EnumerationResult("optimal", best, best_x, feasible, ties, free)
