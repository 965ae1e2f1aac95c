"""Free-format MPS export of the built model.

Row names are the stable constraint tags, column names the symbol-mapped
variable names, so independent solvers report results in terms of the same
identifiers. Binaries are emitted inside INTORG/INTEND markers with BV bounds.
In squared-euclidean mode a QUADOBJ section is appended; entries follow the
usual half-convention (objective contains 0.5 x'Qx), so a diagonal entry of
2.0 means one squared unit of that variable.
"""

from __future__ import annotations

from pathlib import Path as FsPath

from .milp import MilpModel

_OBJ = "COST"
_SENSE = {"<=": "L", ">=": "G", "==": "E"}


def _f(value: float) -> str:
    return f"{value:.12g}"


def write_exchange(model: MilpModel, path=None) -> str:
    """Render the model as MPS text; byte-stable for a given model."""
    seen = set()
    for row in model.rows:
        if row.tag in seen:
            raise ValueError(f"duplicate row tag {row.tag!r}")
        seen.add(row.tag)

    lines = [f"NAME          {model.name}", "ROWS", f" N  {_OBJ}"]
    for row in model.rows:
        lines.append(f" {_SENSE[row.sense]}  {row.tag}")

    by_column: dict[int, list[tuple[str, float]]] = {i: [] for i in range(len(model.variables))}
    for i, coeff in model.objective.items():
        by_column[i].append((_OBJ, coeff))
    for row in model.rows:
        for i, coeff in row.coeffs.items():
            by_column[i].append((row.tag, coeff))

    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for i, var in enumerate(model.variables):
        if var.is_binary != in_int:
            kind = "'INTORG'" if var.is_binary else "'INTEND'"
            lines.append(f"    MARKER{marker:04d}  'MARKER'                 {kind}")
            marker += 1
            in_int = var.is_binary
        entries = by_column[i]
        if not entries:
            entries = [(_OBJ, 0.0)]  # keep every declared column visible
        for j in range(0, len(entries), 2):
            chunk = entries[j:j + 2]
            parts = "   ".join(f"{tag}  {_f(c)}" for tag, c in chunk)
            lines.append(f"    {var.name}  {parts}")
    if in_int:
        lines.append(f"    MARKER{marker:04d}  'MARKER'                 'INTEND'")

    lines.append("RHS")
    rhs_entries = [(row.tag, row.rhs) for row in model.rows if row.rhs != 0.0]
    if model.objective_constant:
        rhs_entries.insert(0, (_OBJ, -model.objective_constant))
    for j in range(0, len(rhs_entries), 2):
        chunk = rhs_entries[j:j + 2]
        parts = "   ".join(f"{tag}  {_f(v)}" for tag, v in chunk)
        lines.append(f"    RHS  {parts}")

    lines.append("BOUNDS")
    for var in model.variables:
        if var.lb == var.ub:
            lines.append(f" FX BND  {var.name}  {_f(var.lb)}")
        elif var.is_binary:
            lines.append(f" BV BND  {var.name}")
        else:
            if var.lb == float("-inf"):
                lines.append(f" MI BND  {var.name}")
            elif var.lb != 0.0:
                lines.append(f" LO BND  {var.name}  {_f(var.lb)}")
            if var.ub != float("inf"):
                lines.append(f" UP BND  {var.name}  {_f(var.ub)}")

    if model.has_quadratic:
        lines.append("QUADOBJ")
        for i, j, coeff in model.quadratic:
            value = 2.0 * coeff if i == j else coeff
            lines.append(f"    {model.variables[i].name}  "
                         f"{model.variables[j].name}  {_f(value)}")

    lines.append("ENDATA")
    text = "\n".join(lines) + "\n"
    if path is not None:
        FsPath(path).write_text(text, encoding="utf-8")
    return text
