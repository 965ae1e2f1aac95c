"""Translates a validated system into a mixed-integer linear model.

Constraint families (tags in parentheses):
  eq1  containment of children in their parent box / the design space
  eq2  subsystem port offsets within the subsystem box
  eq3  component dimension swap under quarter-turn rotation
  eq4  big-M port-offset transform under (m, n, r)
  eq5  big-M pairwise no-overlap with relative-placement binaries (p, q)
  eq6  orientation requirements of mechanical component ports as functions
       of (p, q) - equality rows for r and n, four-row XOR/XNOR rows for m
  eq7  mechanical subsystem port pinned to the facing edge (ego form)
  eq8  port coordinate coincidence along the shaft axis
  eq9  swapped-edge form of eq7 for the connecting perspective
  jcon auxiliary rows of the connection-length objective
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .milp import MilpModel
from .model import (Edge, EnergyDomain, InterferencePair, Node, Path, PortRef,
                    ResolvedConnection, ValidatedSystem)


class FormulationError(ValueError):
    pass


@dataclass(frozen=True)
class BigM:
    """Deactivation constant; sufficient for every big-M row given containment."""

    value: float


def compute_big_m(design_space) -> BigM:
    if design_space.width <= 0 or design_space.length <= 0:
        raise FormulationError("design space dimensions must be positive")
    return BigM(design_space.width + design_space.length)


@dataclass(frozen=True)
class OrientationRequirement:
    """Required orientation binaries for one placement; None marks a free one."""

    m: int | None
    n: int | None
    r: int

    def admits(self, m: int, n: int, r: int) -> bool:
        return ((self.m is None or self.m == m)
                and (self.n is None or self.n == n)
                and self.r == r)


def _column(default_edge: Edge, perspective: str) -> Edge:
    if perspective == "ego":
        return default_edge
    if perspective == "connecting":
        return default_edge.opposite()
    raise ValueError(f"unknown perspective {perspective!r}")


def derive_orientation(default_edge: Edge, p: int, q: int,
                       perspective: str = "ego") -> OrientationRequirement:
    """Closed-form orientation requirement for a mechanical component port.

    Must agree with the geometric oracle on all 32 edge x (p,q) x perspective
    cases; the right-edge m uses XNOR(p, q) and the left edge XOR(p, q).
    """
    col = _column(default_edge, perspective)
    if col is Edge.TOP:
        return OrientationRequirement(None, q, p)
    if col is Edge.BOTTOM:
        return OrientationRequirement(None, 1 - q, p)
    if col is Edge.RIGHT:
        return OrientationRequirement(1 - (p ^ q), None, 1 - p)
    return OrientationRequirement(p ^ q, None, 1 - p)


@dataclass
class VariableMap:
    """Bidirectional mapping between model symbols and variable indices."""

    x: dict[Path, int] = field(default_factory=dict)
    y: dict[Path, int] = field(default_factory=dict)
    w: dict[Path, int] = field(default_factory=dict)
    l: dict[Path, int] = field(default_factory=dict)
    r: dict[Path, int] = field(default_factory=dict)
    m: dict[Path, int] = field(default_factory=dict)
    n: dict[Path, int] = field(default_factory=dict)
    a: dict[PortRef, int] = field(default_factory=dict)
    b: dict[PortRef, int] = field(default_factory=dict)
    p: dict[tuple[Path, int], int] = field(default_factory=dict)
    q: dict[tuple[Path, int], int] = field(default_factory=dict)
    con_aux: dict[int, tuple[int, ...]] = field(default_factory=dict)


@dataclass
class Formulation:
    model: MilpModel
    varmap: VariableMap
    big_m: BigM
    system: ValidatedSystem
    objective_mode: str
    drivers: dict[PortRef, tuple[InterferencePair, str]] = field(default_factory=dict)


def _dotted(path: Path) -> str:
    return ".".join(path)


def build_model(system: ValidatedSystem, objective_mode: str = "l1",
                big_m: float | None = None) -> Formulation:
    """Emit all constraint families and the chosen objective."""
    if objective_mode not in ("l1", "squared-euclidean"):
        raise FormulationError(f"unknown objective mode {objective_mode!r}")
    builder = _Builder(system, objective_mode, big_m)
    return builder.build()


class _Builder:
    def __init__(self, system: ValidatedSystem, mode: str, big_m: float | None):
        self.sys = system
        self.mode = mode
        self.bm = BigM(big_m) if big_m is not None else compute_big_m(system.design_space)
        self.M = self.bm.value
        self.model = MilpModel("layout")
        self.vm = VariableMap()
        self.drivers: dict[PortRef, tuple[InterferencePair, str]] = {}

    # -- variables ---------------------------------------------------------

    def _preorder(self) -> list[Node]:
        out: list[Node] = []

        def walk(node: Node):
            out.append(node)
            for child in node.children:
                walk(child)

        for root in self.sys.roots:
            walk(root)
        return out

    def _component_dims(self, node: Node) -> tuple[float, float]:
        spec = node.spec
        if spec.fixed_pose is not None and spec.fixed_pose.r:
            return spec.length, spec.width  # type: ignore[return-value]
        return spec.width, spec.length  # type: ignore[return-value]

    def _mechanically_engaged(self) -> set[Path]:
        """Elements whose placement is tied down by shafts or fixed poses."""
        engaged = {node.path for node in self._preorder()
                   if node.spec.fixed_pose is not None}
        for conn in self.sys.connections:
            if conn.domain is EnergyDomain.MECHANICAL:
                engaged.add(conn.source.path)
                engaged.add(conn.target.path)
        return engaged

    def _create_variables(self):
        ds = self.sys.design_space
        W, L = ds.width, ds.length
        add = self.model.add_variable
        engaged = self._mechanically_engaged()
        for node in self._preorder():
            path = node.path
            name = _dotted(path)
            spec = node.spec
            pose = spec.fixed_pose
            if pose is not None:
                self.vm.x[path] = add(f"x[{name}]", pose.x, pose.x)
                self.vm.y[path] = add(f"y[{name}]", pose.y, pose.y)
            else:
                self.vm.x[path] = add(f"x[{name}]", -W / 2, W / 2)
                self.vm.y[path] = add(f"y[{name}]", -L / 2, L / 2)
            if node.is_component:
                w0, l0 = spec.width, spec.length
                if pose is not None:
                    we, le = self._component_dims(node)
                    self.vm.w[path] = add(f"w[{name}]", we, we)
                    self.vm.l[path] = add(f"l[{name}]", le, le)
                else:
                    self.vm.w[path] = add(f"w[{name}]", min(w0, l0), max(w0, l0))
                    self.vm.l[path] = add(f"l[{name}]", min(w0, l0), max(w0, l0))
                prio = 0 if path in engaged else 2
                for sym, val in (("r", None if pose is None else pose.r),
                                 ("m", None if pose is None else pose.m),
                                 ("n", None if pose is None else pose.n)):
                    lb, ub = (0, 1) if val is None else (val, val)
                    getattr(self.vm, sym)[path] = add(f"{sym}[{name}]", lb, ub,
                                                      binary=True, priority=prio)
            else:
                self.vm.w[path] = add(f"w[{name}]", 0, W)
                self.vm.l[path] = add(f"l[{name}]", 0, L)
            for port in spec.ports:
                ref = PortRef(path, port.id)
                if node.is_component:
                    a0, b0 = port.offset  # type: ignore[misc]
                    h = max(abs(a0), abs(b0))
                    self.vm.a[ref] = add(f"a[{ref.dotted()}]", -h, h)
                    self.vm.b[ref] = add(f"b[{ref.dotted()}]", -h, h)
                else:
                    self.vm.a[ref] = add(f"a[{ref.dotted()}]", -W / 2, W / 2)
                    self.vm.b[ref] = add(f"b[{ref.dotted()}]", -L / 2, L / 2)
        for parent in self._pair_parents():
            for pair in self.sys.pairs_by_parent[parent]:
                tag = _dotted(parent) or "top"
                pin = self._pinned_placement(pair)
                lbp, ubp = (0, 1) if pin is None else (pin[0], pin[0])
                lbq, ubq = (0, 1) if pin is None else (pin[1], pin[1])
                prio = 2 - (pair.first in engaged) - (pair.second in engaged)
                self.vm.p[(parent, pair.index)] = add(
                    f"p[{tag}:{pair.index}]", lbp, ubp, binary=True, priority=prio)
                self.vm.q[(parent, pair.index)] = add(
                    f"q[{tag}:{pair.index}]", lbq, ubq, binary=True, priority=prio)

    def _pair_parents(self) -> list[Path]:
        parents: list[Path] = [()]
        for node in self._preorder():
            if not node.is_component:
                parents.append(node.path)
        return parents

    def _pinned_placement(self, pair: InterferencePair) -> tuple[int, int] | None:
        """Fully anchored pairs get their (p, q) pinned to a valid placement.

        Only applies when both elements carry fixed poses and no mechanical
        connection ties the pair's binaries to orientation rows; the projected
        solution set is unchanged because such binaries are cost-free.
        """
        ni, nj = self.sys.nodes[pair.first], self.sys.nodes[pair.second]
        if ni.spec.fixed_pose is None or nj.spec.fixed_pose is None:
            return None
        ends = {pair.first, pair.second}
        for conn in self.sys.connections:
            if conn.domain is EnergyDomain.MECHANICAL and \
                    {conn.source.path, conn.target.path} == ends:
                return None
        wi, li = self._component_dims(ni)
        wj, lj = self._component_dims(nj)
        xi, yi = ni.spec.fixed_pose.x, ni.spec.fixed_pose.y
        xj, yj = nj.spec.fixed_pose.x, nj.spec.fixed_pose.y
        eps = 1e-9
        if yj - lj / 2 >= yi + li / 2 - eps:
            return (0, 0)
        if yj + lj / 2 <= yi - li / 2 + eps:
            return (0, 1)
        if xj - wj / 2 >= xi + wi / 2 - eps:
            return (1, 0)
        if xj + wj / 2 <= xi - wi / 2 + eps:
            return (1, 1)
        return None  # overlapping anchored pair: leave rows to prove infeasibility

    # -- constraint families -------------------------------------------------

    def emit_containment(self, child: Node):
        """eq1: child box inside parent box (or the design space)."""
        vm, row = self.vm, self.model.add_row
        path = child.path
        lam = child.level
        xc, yc, wc, lc = vm.x[path], vm.y[path], vm.w[path], vm.l[path]
        tag = f"eq1/{lam}/{_dotted(path)}"
        if len(path) == 1:
            W, L = self.sys.design_space.width, self.sys.design_space.length
            row({xc: 1, wc: 0.5}, "<=", W / 2, f"{tag}/0")
            row({xc: -1, wc: 0.5}, "<=", W / 2, f"{tag}/1")
            row({yc: 1, lc: 0.5}, "<=", L / 2, f"{tag}/2")
            row({yc: -1, lc: 0.5}, "<=", L / 2, f"{tag}/3")
        else:
            parent = path[:-1]
            xp, yp, wp, lp = vm.x[parent], vm.y[parent], vm.w[parent], vm.l[parent]
            row({xc: 1, xp: -1, wc: 0.5, wp: -0.5}, "<=", 0, f"{tag}/0")
            row({xp: 1, xc: -1, wc: 0.5, wp: -0.5}, "<=", 0, f"{tag}/1")
            row({yc: 1, yp: -1, lc: 0.5, lp: -0.5}, "<=", 0, f"{tag}/2")
            row({yp: 1, yc: -1, lc: 0.5, lp: -0.5}, "<=", 0, f"{tag}/3")

    def emit_port_bounds(self, node: Node, ref: PortRef):
        """eq2: subsystem port offset within the (variable) subsystem box."""
        vm, row = self.vm, self.model.add_row
        a, b = vm.a[ref], vm.b[ref]
        w, l = vm.w[node.path], vm.l[node.path]
        tag = f"eq2/{node.level}/{ref.dotted()}"
        row({a: 1, w: -0.5}, "<=", 0, f"{tag}/0")
        row({a: -1, w: -0.5}, "<=", 0, f"{tag}/1")
        row({b: 1, l: -0.5}, "<=", 0, f"{tag}/2")
        row({b: -1, l: -0.5}, "<=", 0, f"{tag}/3")

    def emit_rotation(self, node: Node):
        """eq3: w = w0(1-r) + l0 r and l = l0(1-r) + w0 r."""
        vm, row = self.vm, self.model.add_row
        spec = node.spec
        w0, l0 = spec.width, spec.length
        path = node.path
        tag = f"eq3/{node.level}/{_dotted(path)}"
        row({vm.w[path]: 1, vm.r[path]: w0 - l0}, "==", w0, f"{tag}/0")
        row({vm.l[path]: 1, vm.r[path]: l0 - w0}, "==", l0, f"{tag}/1")

    def emit_port_transform(self, node: Node, ref: PortRef):
        """eq4: eight big-M rows tying (a, b) to the defaults under (m, n, r)."""
        vm, row = self.vm, self.model.add_row
        port = self.sys.port_spec(ref)
        a0, b0 = port.offset  # type: ignore[misc]
        path = node.path
        a, b = vm.a[ref], vm.b[ref]
        m, n, r = vm.m[path], vm.n[path], vm.r[path]
        M = self.M
        tag = f"eq4/{node.level}/{ref.dotted()}"
        row({a: 1, m: 2 * a0, r: M}, ">=", a0, f"{tag}/0")
        row({a: 1, m: 2 * a0, r: -M}, "<=", a0, f"{tag}/1")
        row({a: 1, n: 2 * b0, r: -M}, ">=", b0 - M, f"{tag}/2")
        row({a: 1, n: 2 * b0, r: M}, "<=", b0 + M, f"{tag}/3")
        row({b: 1, n: 2 * b0, r: M}, ">=", b0, f"{tag}/4")
        row({b: 1, n: 2 * b0, r: -M}, "<=", b0, f"{tag}/5")
        row({b: 1, m: -2 * a0, r: -M}, ">=", -a0 - M, f"{tag}/6")
        row({b: 1, m: -2 * a0, r: M}, "<=", -a0 + M, f"{tag}/7")

    def emit_interference(self, pair: InterferencePair):
        """eq5: four big-M rows; (p,q) selects above/below/right/left."""
        vm, row = self.vm, self.model.add_row
        i, j = pair.first, pair.second
        lam = len(i)  # children of a level-(lam-1) parent sit at level lam-1+1
        xi, yi, wi, li = vm.x[i], vm.y[i], vm.w[i], vm.l[i]
        xj, yj, wj, lj = vm.x[j], vm.y[j], vm.w[j], vm.l[j]
        p = vm.p[(pair.parent, pair.index)]
        q = vm.q[(pair.parent, pair.index)]
        M = self.M
        tag = f"eq5/{lam - 1}/{_dotted(i)}~{_dotted(j)}"
        row({yj: 1, lj: -0.5, yi: -1, li: -0.5, p: M, q: M}, ">=", 0, f"{tag}/0")
        row({yj: 1, lj: 0.5, yi: -1, li: 0.5, p: -M, q: M}, "<=", M, f"{tag}/1")
        row({xj: 1, wj: -0.5, xi: -1, wi: -0.5, p: -M, q: M}, ">=", -M, f"{tag}/2")
        row({xj: 1, wj: 0.5, xi: -1, wi: 0.5, p: M, q: M}, "<=", 2 * M, f"{tag}/3")

    def emit_orientation_requirement(self, node: Node, ref: PortRef,
                                     pair: InterferencePair, perspective: str):
        """eq6: orientation binaries of a component tied to the pair's (p, q)."""
        vm, row = self.vm, self.model.add_row
        edge = self.sys.port_edges[ref]
        col = _column(edge, perspective)
        path = node.path
        m, n, r = vm.m[path], vm.n[path], vm.r[path]
        p = vm.p[(pair.parent, pair.index)]
        q = vm.q[(pair.parent, pair.index)]
        tag = f"eq6/{node.level}/{ref.dotted()}"
        if col in (Edge.TOP, Edge.BOTTOM):
            row({r: 1, p: -1}, "==", 0, f"{tag}/0")
            if col is Edge.TOP:
                row({n: 1, q: -1}, "==", 0, f"{tag}/1")
            else:
                row({n: 1, q: 1}, "==", 1, f"{tag}/1")
        else:
            row({r: 1, p: 1}, "==", 1, f"{tag}/0")
            if col is Edge.RIGHT:  # m = XNOR(p, q)
                row({m: 1, p: 1, q: 1}, ">=", 1, f"{tag}/1")
                row({m: 1, p: -1, q: -1}, ">=", -1, f"{tag}/2")
                row({m: 1, p: 1, q: -1}, "<=", 1, f"{tag}/3")
                row({m: 1, p: -1, q: 1}, "<=", 1, f"{tag}/4")
            else:  # m = XOR(p, q)
                row({m: 1, p: -1, q: 1}, ">=", 0, f"{tag}/1")
                row({m: 1, p: 1, q: -1}, ">=", 0, f"{tag}/2")
                row({m: 1, p: -1, q: -1}, "<=", 0, f"{tag}/3")
                row({m: 1, p: 1, q: 1}, "<=", 2, f"{tag}/4")

    def emit_subsystem_port_edge(self, node: Node, ref: PortRef,
                                 pair: InterferencePair, perspective: str):
        """eq7 (ego) / eq9 (connecting): pin a subsystem port to the facing edge."""
        vm, row = self.vm, self.model.add_row
        a, b = vm.a[ref], vm.b[ref]
        w, l = vm.w[node.path], vm.l[node.path]
        p = vm.p[(pair.parent, pair.index)]
        q = vm.q[(pair.parent, pair.index)]
        M = self.M
        if perspective == "ego":
            tag = f"eq7/{node.level}/{ref.dotted()}"
            row({b: 1, l: -0.5, p: M, q: M}, ">=", 0, f"{tag}/0")
            row({b: 1, l: 0.5, p: -M, q: M}, "<=", M, f"{tag}/1")
            row({a: 1, w: -0.5, p: -M, q: M}, ">=", -M, f"{tag}/2")
            row({a: 1, w: 0.5, p: M, q: M}, "<=", 2 * M, f"{tag}/3")
        else:
            tag = f"eq9/{node.level}/{ref.dotted()}"
            row({b: 1, l: 0.5, p: -M, q: -M}, "<=", 0, f"{tag}/0")
            row({b: 1, l: -0.5, p: M, q: -M}, ">=", -M, f"{tag}/1")
            row({a: 1, w: 0.5, p: M, q: -M}, "<=", M, f"{tag}/2")
            row({a: 1, w: -0.5, p: -M, q: -M}, ">=", -2 * M, f"{tag}/3")

    def emit_port_coincidence(self, conn: ResolvedConnection,
                              pair: InterferencePair | None):
        """eq8: one shared port coordinate (p selects which), or both if direct.

        For inter-level connections the left-hand side is the internal
        element's port and the right-hand side the subsystem's own port.
        """
        vm, row = self.vm, self.model.add_row
        k, l_ = (conn.target, conn.source) if not conn.same_level else \
                (conn.source, conn.target)
        xk, ak = vm.x[k.path], vm.a[k]
        yk, bk = vm.y[k.path], vm.b[k]
        xl, al = vm.x[l_.path], vm.a[l_]
        yl, bl = vm.y[l_.path], vm.b[l_]
        M = self.M
        tag = f"eq8/{conn.level}/{conn.source.dotted()}~{conn.target.dotted()}"
        ycoef = {yk: 1, bk: 1, yl: -1, bl: -1}
        xcoef = {xk: 1, ak: 1, xl: -1, al: -1}
        if conn.kind == "direct":
            row(dict(ycoef), ">=", 0, f"{tag}/0")
            row(dict(ycoef), "<=", 0, f"{tag}/1")
            row(dict(xcoef), ">=", 0, f"{tag}/2")
            row(dict(xcoef), "<=", 0, f"{tag}/3")
            return
        if pair is None:
            raise FormulationError(f"{tag}: no relative-placement pair available")
        p = vm.p[(pair.parent, pair.index)]
        row({**ycoef, p: -M}, ">=", -M, f"{tag}/0")
        row({**ycoef, p: M}, "<=", M, f"{tag}/1")
        row({**xcoef, p: M}, ">=", 0, f"{tag}/2")
        row({**xcoef, p: -M}, "<=", 0, f"{tag}/3")

    # -- alignment orchestration ---------------------------------------------

    def _role(self, elem: Path, pair: InterferencePair) -> str:
        return "ego" if elem == pair.first else "connecting"

    def _emit_alignment(self):
        mech = [c for c in self.sys.connections
                if c.domain is EnergyDomain.MECHANICAL]
        for conn in (c for c in mech if c.same_level):
            pair = self.sys.pair_of(conn.source.path, conn.target.path)
            if pair is None:
                raise FormulationError(
                    f"{conn.source.dotted()} ~ {conn.target.dotted()}: mechanical "
                    "connection without an interference pair")
            for ref in (conn.source, conn.target):
                node = self.sys.nodes[ref.path]
                role = self._role(ref.path, pair)
                if node.is_component:
                    self.emit_orientation_requirement(node, ref, pair, role)
                else:
                    self.emit_subsystem_port_edge(node, ref, pair, role)
                self.drivers[ref] = (pair, role)
            self.emit_port_coincidence(conn, pair)
        for conn in sorted((c for c in mech if not c.same_level),
                           key=lambda c: c.level):
            driver = self.drivers.get(conn.source)
            if driver is None:
                raise FormulationError(
                    f"{conn.source.dotted()}: mechanical subsystem port has no "
                    "external connection driving its internal alignment")
            pair, role = driver
            self.emit_internal_alignment(conn, pair, role)

    def emit_internal_alignment(self, conn: ResolvedConnection,
                                pair: InterferencePair, perspective: str):
        """Align an internal element with its subsystem's external port."""
        child = self.sys.nodes[conn.target.path]
        if child.is_component:
            self.emit_orientation_requirement(child, conn.target, pair, perspective)
        else:
            self.emit_subsystem_port_edge(child, conn.target, pair, perspective)
        self.drivers[conn.target] = (pair, perspective)
        self.emit_port_coincidence(conn, pair if conn.kind != "direct" else None)

    # -- relaxation strengthening ----------------------------------------------

    def _area_floor(self, node: Node) -> float:
        """Lower bound on a subsystem's occupied area; rotation-invariant."""
        total = 0.0
        for child in node.children:
            if child.is_component:
                total += child.spec.width * child.spec.length  # type: ignore[operator]
            else:
                total += self._area_floor(child)
        return total

    def emit_dimension_cuts(self, node: Node):
        """cut: w + l >= 2 sqrt(sum of child areas).

        Implied by disjoint containment (w*l >= total child area and the
        AM-GM inequality), so integer solutions are untouched; it lifts the
        relaxation, which otherwise lets children overlap fractionally and
        collapses subsystem dimensions onto the single largest child.
        """
        floor = self._area_floor(node)
        if floor <= 0:
            return
        path = node.path
        self.model.add_row({self.vm.w[path]: 1, self.vm.l[path]: 1}, ">=",
                           2.0 * floor ** 0.5,
                           f"cut/{node.level}/{_dotted(path)}/0")

    # -- objective -------------------------------------------------------------

    def build_objective(self):
        """J_dim on subsystem dimensions plus per-connection length terms."""
        vm, model = self.vm, self.model
        W, L = self.sys.design_space.width, self.sys.design_space.length
        for node in self._preorder():
            if not node.is_component:
                model.add_objective(vm.w[node.path], 1.0)
                model.add_objective(vm.l[node.path], 1.0)
        for idx, conn in enumerate(self.sys.connections):
            k, l_ = conn.source, conn.target
            dx = {vm.x[k.path]: 1, vm.a[k]: 1, vm.x[l_.path]: -1, vm.a[l_]: -1}
            dy = {vm.y[k.path]: 1, vm.b[k]: 1, vm.y[l_.path]: -1, vm.b[l_]: -1}
            tag = f"jcon/{conn.level}/{k.dotted()}~{l_.dotted()}"
            if self.mode == "l1":
                dxp = model.add_variable(f"dx+[{idx}]", 0, W)
                dxm = model.add_variable(f"dx-[{idx}]", 0, W)
                dyp = model.add_variable(f"dy+[{idx}]", 0, L)
                dym = model.add_variable(f"dy-[{idx}]", 0, L)
                model.add_row({**dx, dxp: -1, dxm: 1}, "==", 0, f"{tag}/0")
                model.add_row({**dy, dyp: -1, dym: 1}, "==", 0, f"{tag}/1")
                for aux in (dxp, dxm, dyp, dym):
                    model.add_objective(aux, 1.0)
                vm.con_aux[idx] = (dxp, dxm, dyp, dym)
            else:
                dxv = model.add_variable(f"dx[{idx}]", -W, W)
                dyv = model.add_variable(f"dy[{idx}]", -L, L)
                model.add_row({**dx, dxv: -1}, "==", 0, f"{tag}/0")
                model.add_row({**dy, dyv: -1}, "==", 0, f"{tag}/1")
                model.quadratic.append((dxv, dxv, 1.0))
                model.quadratic.append((dyv, dyv, 1.0))
                vm.con_aux[idx] = (dxv, dyv)

    def _register_move_groups(self):
        """Per-element binary clusters for the solver's improvement heuristics."""
        pair_vars: dict[Path, list[int]] = {}
        for parent, pairs in self.sys.pairs_by_parent.items():
            for pair in pairs:
                key = (parent, pair.index)
                for elem in (pair.first, pair.second):
                    pair_vars.setdefault(elem, []).extend(
                        (self.vm.p[key], self.vm.q[key]))
        for node in self._preorder():
            ids = list(pair_vars.get(node.path, []))
            if node.is_component:
                ids += [self.vm.r[node.path], self.vm.m[node.path],
                        self.vm.n[node.path]]
            if ids:
                self.model.move_groups.append(sorted(ids))

    # -- orchestration -----------------------------------------------------------

    def build(self) -> Formulation:
        self._create_variables()
        nodes = self._preorder()
        for node in nodes:
            self.emit_containment(node)
        for node in nodes:
            if not node.is_component:
                for port in node.spec.ports:
                    self.emit_port_bounds(node, PortRef(node.path, port.id))
        for node in nodes:
            if node.is_component and node.spec.fixed_pose is None:
                self.emit_rotation(node)
        for node in nodes:
            if node.is_component:
                for port in node.spec.ports:
                    self.emit_port_transform(node, PortRef(node.path, port.id))
        for parent in self._pair_parents():
            for pair in self.sys.pairs_by_parent[parent]:
                self.emit_interference(pair)
        self._emit_alignment()
        for node in nodes:
            if not node.is_component:
                self.emit_dimension_cuts(node)
        self.build_objective()
        self._register_move_groups()
        return Formulation(self.model, self.vm, self.bm, self.sys, self.mode,
                           self.drivers)
