"""LP relaxation backend and best-first branch-and-bound over binaries.

The LP subproblem is delegated to HiGHS dual simplex (scipy.optimize.linprog),
which returns vertex solutions and dual values. Branch-and-bound, node
bookkeeping, bound propagation from equality rows, and feasibility
verification are implemented here.
"""

from __future__ import annotations

import heapq
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .milp import LpArrays, MilpModel

FEAS_TOL = 1e-7
INT_TOL = 1e-6


class NumericalInstabilityError(RuntimeError):
    """LP solution violates feasibility tolerance after refinement."""

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(f"feasibility residual {residual:.3e} exceeds "
                         f"tolerance {tolerance:.3e}")


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float | None = None
    duals_ineq: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    marginals_lower: np.ndarray | None = None
    marginals_upper: np.ndarray | None = None
    residual: float = 0.0


@dataclass
class SolveOptions:
    gap: float = 1e-6                 # relative optimality gap
    node_limit: int = 1_000_000
    time_limit: float | None = None   # seconds
    deterministic: bool = True
    threads: int = 1


@dataclass
class MipSolution:
    status: str  # "optimal" | "infeasible" | "gap-limit" | "node-limit"
    assignment: np.ndarray | None
    objective: float | None
    bound: float
    nodes: int
    wall_time: float
    gap: float | None = None
    dive_lps: int = 0
    bound_history: list[float] = field(default_factory=list)


@dataclass
class Violation:
    tag: str
    kind: str       # "row" | "bound" | "integrality"
    residual: float
    detail: str = ""


@dataclass
class ViolationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return "feasible: no violations"
        lines = [f"{len(self.violations)} violation(s):"]
        for v in self.violations:
            lines.append(f"  {v.tag} [{v.kind}] residual {v.residual:.6g} {v.detail}")
        return "\n".join(lines)


def solve_lp(model: MilpModel, bound_overrides: dict[int, tuple[float, float]] | None = None,
             arrays: LpArrays | None = None) -> LpSolution:
    """Solve the relaxation with binaries in [0, 1]; vertex solution guaranteed."""
    if model.has_quadratic:
        raise ValueError("internal solver has no quadratic objective support; "
                         "use the exchange-file export")
    arr = arrays if arrays is not None else model.lp_arrays()
    lb, ub = arr.lb, arr.ub
    if bound_overrides:
        lb = lb.copy()
        ub = ub.copy()
        for i, (lo, hi) in bound_overrides.items():
            lb[i], ub[i] = lo, hi
    bounds = np.column_stack([lb, ub])
    res = linprog(arr.c, A_ub=arr.a_ub, b_ub=arr.b_ub if arr.a_ub is not None else None,
                  A_eq=arr.a_eq, b_eq=arr.b_eq if arr.a_eq is not None else None,
                  bounds=bounds, method="highs-ds")
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status == 3:
        return LpSolution("unbounded")
    if res.status != 0:
        raise NumericalInstabilityError(float("nan"), FEAS_TOL)
    x = np.asarray(res.x)
    residual = _feasibility_residual(arr, x, lb, ub)
    if residual > FEAS_TOL:
        raise NumericalInstabilityError(residual, FEAS_TOL)
    return LpSolution(
        "optimal", x, float(res.fun) + model.objective_constant,
        duals_ineq=None if arr.a_ub is None else np.asarray(res.ineqlin.marginals),
        duals_eq=None if arr.a_eq is None else np.asarray(res.eqlin.marginals),
        marginals_lower=np.asarray(res.lower.marginals),
        marginals_upper=np.asarray(res.upper.marginals),
        residual=residual)


def _feasibility_residual(arr: LpArrays, x: np.ndarray,
                          lb: np.ndarray, ub: np.ndarray) -> float:
    """Max relative constraint violation of x."""
    worst = 0.0
    if arr.a_ub is not None:
        act = arr.a_ub @ x
        scale = np.maximum(1.0, np.abs(arr.b_ub))
        worst = max(worst, float(np.max((act - arr.b_ub) / scale, initial=0.0)))
    if arr.a_eq is not None:
        act = arr.a_eq @ x
        scale = np.maximum(1.0, np.abs(arr.b_eq))
        worst = max(worst, float(np.max(np.abs(act - arr.b_eq) / scale, initial=0.0)))
    worst = max(worst, float(np.max(lb - x, initial=0.0)))
    worst = max(worst, float(np.max(x - ub, initial=0.0)))
    return worst


def verify_assignment(model: MilpModel, x: np.ndarray,
                      tol: float = 1e-6) -> ViolationReport:
    """List every violated row (with its tag), bound, and integrality breach."""
    x = np.asarray(x, dtype=float)
    violations: list[Violation] = []
    for i, v in enumerate(model.variables):
        if x[i] < v.lb - tol * max(1.0, abs(v.lb)):
            violations.append(Violation(f"bound/{v.name}", "bound",
                                        v.lb - x[i], f"{v.name} below {v.lb}"))
        if x[i] > v.ub + tol * max(1.0, abs(v.ub)):
            violations.append(Violation(f"bound/{v.name}", "bound",
                                        x[i] - v.ub, f"{v.name} above {v.ub}"))
        if v.is_binary and abs(x[i] - round(x[i])) > tol:
            violations.append(Violation(f"integrality/{v.name}", "integrality",
                                        abs(x[i] - round(x[i])), v.name))
    for row in model.rows:
        act = model.row_activity(x, row)
        scale = max(1.0, abs(row.rhs))
        if row.sense == "<=":
            resid = (act - row.rhs) / scale
        elif row.sense == ">=":
            resid = (row.rhs - act) / scale
        else:
            resid = abs(act - row.rhs) / scale
        if resid > tol:
            violations.append(Violation(row.tag, "row", resid,
                                        f"activity {act:.9g} {row.sense} {row.rhs:.9g}"))
    return ViolationReport(violations)


class _Propagator:
    """Bound tightening from equality rows over binaries.

    Handles singleton rows (c*v == rhs) and two-variable rows
    (c1*v1 + c2*v2 == rhs), which cover the orientation ties r = p,
    r = 1 - p, n = q and n = 1 - q.
    """

    def __init__(self, model: MilpModel):
        binset = set(model.binary_indices())
        self.singletons: list[tuple[int, float, float]] = []
        self.partners: dict[int, list[tuple[int, float, float, float]]] = {}
        for row in model.rows:
            if row.sense != "==" or not row.coeffs or not set(row.coeffs) <= binset:
                continue
            items = list(row.coeffs.items())
            if len(items) == 1:
                (i, ci), = items
                self.singletons.append((i, ci, row.rhs))
            elif len(items) == 2:
                (i, ci), (j, cj) = items
                self.partners.setdefault(i, []).append((j, ci, cj, row.rhs))
                self.partners.setdefault(j, []).append((i, cj, ci, row.rhs))

    def closure(self, fixes: dict[int, int]) -> dict[int, int] | None:
        """Transitively extend `fixes`; None when a conflict arises."""
        out = dict(fixes)
        queue = list(fixes)
        for i, ci, rhs in self.singletons:
            val = rhs / ci
            ival = round(val)
            if abs(val - ival) > 1e-9 or ival not in (0, 1):
                return None
            if out.get(i, ival) != ival:
                return None
            if i not in out:
                out[i] = ival
                queue.append(i)
        while queue:
            i = queue.pop()
            for j, ci, cj, rhs in self.partners.get(i, []):
                val = (rhs - ci * out[i]) / cj
                ival = round(val)
                if abs(val - ival) > 1e-9 or ival not in (0, 1):
                    return None
                if j in out:
                    if out[j] != ival:
                        return None
                else:
                    out[j] = ival
                    queue.append(j)
        return out


@dataclass
class _Node:
    id: int
    parent: "_Node | None"
    var: int | None
    val: int | None
    bound_est: float
    depth: int

    def fixes(self) -> dict[int, int]:
        out: dict[int, int] = {}
        node: _Node | None = self
        while node is not None and node.var is not None:
            out.setdefault(node.var, node.val)  # type: ignore[arg-type]
            node = node.parent
        return out


def _most_fractional(x: np.ndarray, candidates: list[int]) -> int | None:
    best, best_score = None, INT_TOL
    for i in candidates:
        f = x[i] - np.floor(x[i])
        score = min(f, 1.0 - f)
        if score > best_score:
            best, best_score = i, score
    return best


def _polish(model, arrays, prop, binaries, prefixed, x0, obj0, budget,
            deadline=None):
    """First-improvement local search over binary assignments around x0.

    Alternates bounded sub-searches over the model's move groups with
    pair-replacement and single-flip passes. Budgeted by LP count for
    reproducibility; the wall-clock deadline is only checked between phases.
    """
    free = [i for i in binaries if i not in prefixed]
    current = {i: int(round(x0[i])) for i in free}
    best_x, best_obj = x0, obj0
    lps = 0
    # pair binaries come as adjacent (p, q) columns; regroup them by name
    pq = []
    by_name = {model.variables[i].name: i for i in free}
    for i in free:
        name = model.variables[i].name
        if name.startswith("p["):
            j = by_name.get("q[" + name[2:])
            if j is not None:
                pq.append((i, j))
    singles = [i for i in free if not any(i in t for t in pq)]

    def attempt(assign) -> bool:
        nonlocal best_x, best_obj, current, lps
        trial = prop.closure({**prefixed, **assign})
        if trial is None:
            return False
        lp = solve_lp(model, {k: (float(v), float(v)) for k, v in trial.items()},
                      arrays)
        lps += 1
        if lp.status == "optimal" and lp.objective < best_obj - 1e-9:
            best_x, best_obj = lp.x.copy(), lp.objective
            for i in free:
                best_x[i] = round(best_x[i])
            current = {i: int(round(lp.x[i])) for i in free}
            return True
        return False

    def small_moves() -> bool:
        nonlocal lps
        any_gain = False
        improved = True
        while improved and lps < budget:
            improved = False
            for i, j in pq:
                if lps >= budget:
                    break
                base = (current[i], current[j])
                for p in (0, 1):
                    for q in (0, 1):
                        if (p, q) == base:
                            continue
                        if attempt({**current, i: p, j: q}):
                            improved = any_gain = True
                            break
                    else:
                        continue
                    break
            for i in singles:
                if lps >= budget:
                    break
                if attempt({**current, i: 1 - current[i]}):
                    improved = any_gain = True
        return any_gain

    def out_of_time() -> bool:
        return deadline is not None and time.perf_counter() > deadline

    def neighborhood_moves() -> bool:
        """Re-solve a bounded sub-search with one move group freed."""
        nonlocal lps, best_x, best_obj, current
        any_gain = False
        for group in model.move_groups:
            if lps >= budget or out_of_time():
                break
            group_free = [i for i in group if i in current]
            if not group_free:
                continue
            overrides = {i: (float(v), float(v)) for i, v in current.items()
                         if i not in group_free}
            sub = model.clone_with_bounds(overrides)
            res = branch_and_bound(sub, SolveOptions(node_limit=400),
                                   initial_incumbent=best_x)
            lps += max(res.nodes, 1) + res.dive_lps
            if res.objective is not None and res.objective < best_obj - 1e-9:
                best_x, best_obj = res.assignment, res.objective
                current = {i: int(round(best_x[i])) for i in free}
                any_gain = True
        return any_gain

    for _ in range(4):
        if out_of_time():
            break
        gained = neighborhood_moves()
        if lps >= budget or out_of_time():
            break
        gained |= small_moves()
        if not gained:
            break
    return best_x, best_obj, lps


def branch_and_bound(model: MilpModel, options: SolveOptions | None = None,
                     initial_incumbent: np.ndarray | None = None) -> MipSolution:
    """Best-first branch-and-bound with proven-gap termination.

    Deterministic mode: best-bound node selection with ties broken by node id,
    branching on the most fractional binary with ties broken by variable id.
    An initial incumbent (e.g. an imported external solution) only seeds the
    cutoff; it is replaced as soon as a better point is found.
    """
    opts = options or SolveOptions()
    start = time.perf_counter()
    arrays = model.lp_arrays()
    prop = _Propagator(model)
    binaries = model.binary_indices()
    prefixed = {i: int(model.variables[i].lb) for i in binaries
                if model.variables[i].lb == model.variables[i].ub}

    root_fixes = prop.closure(prefixed)
    if root_fixes is None:
        return MipSolution("infeasible", None, None, float("inf"), 0,
                           time.perf_counter() - start)

    def overrides_for(fixes: dict[int, int]) -> dict[int, tuple[float, float]]:
        return {i: (float(v), float(v)) for i, v in fixes.items()}

    root_lp = solve_lp(model, overrides_for(root_fixes), arrays)
    if root_lp.status == "infeasible":
        return MipSolution("infeasible", None, None, float("inf"), 1,
                           time.perf_counter() - start)
    if root_lp.status == "unbounded":
        raise ValueError("relaxation is unbounded; all variables need finite "
                         "bounds for branch-and-bound")

    incumbent_x: np.ndarray | None = None
    incumbent_obj = float("inf")
    dive_lps = 0
    if initial_incumbent is not None:
        given = np.asarray(initial_incumbent, dtype=float)
        if verify_assignment(model, given).ok:
            incumbent_x = given
            incumbent_obj = float(arrays.c @ given) + model.objective_constant

    def is_integral(x: np.ndarray) -> bool:
        return all(abs(x[i] - round(x[i])) <= INT_TOL for i in binaries)

    def snap(x: np.ndarray) -> np.ndarray:
        out = x.copy()
        for i in binaries:
            out[i] = round(out[i])
        return out

    # Root dive: LP-guided depth-first rounding with backtracking, to seed
    # the incumbent early. Structurally critical binaries (lower variable
    # priority) are decided first. Budget-limited by LP count; failure just
    # means no warm start.
    budget = 0 if incumbent_x is not None else min(25000, max(100, 100 * len(binaries)))
    order = sorted(binaries, key=lambda i: (model.variables[i].priority, i))

    def next_fractional(x: np.ndarray, fixes: dict[int, int]) -> int | None:
        for i in order:
            if i not in fixes and abs(x[i] - round(x[i])) > INT_TOL:
                return i
        return None

    frames: list[list] = []
    dive_fixes, dive_lp = dict(root_fixes), root_lp
    while dive_lps < budget:
        if is_integral(dive_lp.x):
            incumbent_x = snap(dive_lp.x)
            incumbent_obj = dive_lp.objective
            break
        var = next_fractional(dive_lp.x, dive_fixes)
        if var is None:
            break
        preferred = int(round(dive_lp.x[var]))
        frames.append([dive_fixes, var, [preferred, 1 - preferred]])
        advanced = False
        while frames and not advanced and dive_lps < budget:
            ffixes, fvar, fvals = frames[-1]
            while fvals and not advanced:
                val = fvals.pop(0)
                trial = prop.closure({**ffixes, fvar: val})
                if trial is None:
                    continue
                lp = solve_lp(model, overrides_for(trial), arrays)
                dive_lps += 1
                if lp.status == "optimal":
                    dive_fixes, dive_lp = trial, lp
                    advanced = True
            if not advanced:
                frames.pop()
        if not advanced:
            break

    # Polish the dive incumbent: deterministic first-improvement passes that
    # re-place each pair (all four relative placements) and flip each
    # orientation binary, re-solving the LP with all other binaries held.
    if incumbent_x is not None and initial_incumbent is None:
        deadline = None if opts.time_limit is None else start + opts.time_limit
        incumbent_x, incumbent_obj, polish_lps = _polish(
            model, arrays, prop, binaries, prefixed, incumbent_x,
            incumbent_obj, budget - dive_lps, deadline)
        dive_lps += polish_lps

    heap: list[tuple[float, int]] = []
    nodes_by_id: dict[int, _Node] = {}
    next_id = 0

    def push(parent: _Node | None, var: int | None, val: int | None, bound: float):
        nonlocal next_id
        node = _Node(next_id, parent, var, val, bound,
                     0 if parent is None else parent.depth + 1)
        nodes_by_id[node.id] = node
        heapq.heappush(heap, (bound, node.id))
        next_id += 1

    push(None, None, None, root_lp.objective)

    explored = 0
    pruned_floor = float("inf")
    bound_report = -float("inf")
    history: list[float] = []
    status = "optimal"

    def rel_gap() -> float:
        if incumbent_x is None:
            return float("inf")
        return (incumbent_obj - bound_report) / max(1.0, abs(incumbent_obj))

    def cutoff() -> float:
        if incumbent_x is None:
            return float("inf")
        return incumbent_obj - opts.gap * max(1.0, abs(incumbent_obj))

    executor = None
    batch = 1
    if not opts.deterministic and opts.threads > 1:
        executor = ThreadPoolExecutor(max_workers=opts.threads)
        batch = opts.threads

    try:
        while heap:
            current_lb = heap[0][0]
            bound_report = max(bound_report, min(current_lb, pruned_floor,
                                                 incumbent_obj))
            if not history or bound_report > history[-1]:
                history.append(bound_report)
            if rel_gap() <= opts.gap:
                break
            if explored >= opts.node_limit:
                status = "node-limit"
                break
            if opts.time_limit is not None and \
                    time.perf_counter() - start > opts.time_limit:
                status = "gap-limit"
                break

            popped: list[_Node] = []
            while heap and len(popped) < batch:
                est, node_id = heapq.heappop(heap)
                node = nodes_by_id.pop(node_id)
                if est >= cutoff():
                    pruned_floor = min(pruned_floor, est)
                    continue
                popped.append(node)
            if not popped:
                continue

            prepared = []
            for node in popped:
                fixes = prop.closure({**root_fixes, **node.fixes()})
                prepared.append((node, fixes))
            if executor is None or len(prepared) == 1:
                results = [None if f is None else solve_lp(model, overrides_for(f), arrays)
                           for _, f in prepared]
            else:
                results = list(executor.map(
                    lambda nf: None if nf[1] is None
                    else solve_lp(model, overrides_for(nf[1]), arrays), prepared))

            for (node, fixes), lp in zip(prepared, results):
                explored += 1
                if fixes is None or lp.status == "infeasible":
                    continue
                if lp.objective >= cutoff():
                    pruned_floor = min(pruned_floor, lp.objective)
                    continue
                if is_integral(lp.x):
                    if lp.objective < incumbent_obj:
                        incumbent_x = snap(lp.x)
                        incumbent_obj = lp.objective
                    continue
                free = [i for i in binaries if i not in fixes]
                var = _most_fractional(lp.x, free)
                if var is None:
                    continue
                for val in (0, 1):
                    push(node, var, val, lp.objective)
        else:
            pass
    finally:
        if executor is not None:
            executor.shutdown(wait=False)

    if not heap:
        final_lb = min(pruned_floor, incumbent_obj)
    else:
        final_lb = min(heap[0][0], pruned_floor, incumbent_obj)
    bound_report = max(bound_report, final_lb) if final_lb != float("inf") else bound_report
    if not history or (np.isfinite(bound_report) and bound_report > history[-1]):
        history.append(bound_report)

    wall = time.perf_counter() - start
    if incumbent_x is None:
        if status == "optimal":  # exhausted without incumbent
            return MipSolution("infeasible", None, None, float("inf"), explored,
                               wall, None, dive_lps, history)
        return MipSolution(status, None, None, bound_report, explored, wall,
                           None, dive_lps, history)
    gap = (incumbent_obj - bound_report) / max(1.0, abs(incumbent_obj))
    if status == "optimal" and gap > opts.gap:
        # heap drained logically implies gap closed; numerical guard
        gap = max(gap, 0.0)
    if status == "optimal":
        gap = min(gap, opts.gap)
    return MipSolution(status, incumbent_x, incumbent_obj, bound_report,
                       explored, wall, gap, dive_lps, history)
