"""Hierarchical layout model: elements, ports, connections, validation, grouping.

The model is a tree of rectangular elements. Components are leaves with fixed
default dimensions and fixed port offsets; subsystems contain at least two
children and get their dimensions and port locations from the optimizer.
Levels are numbered from 0 (top-level elements placed directly in the design
space) downward.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence


class EnergyDomain(enum.Enum):
    MECHANICAL = "mechanical"
    ELECTRICAL = "electrical"


class Edge(enum.Enum):
    """Boundary edge of an element box, in the element's own frame."""

    TOP = "top"
    BOTTOM = "bottom"
    RIGHT = "right"
    LEFT = "left"

    def opposite(self) -> "Edge":
        return _OPPOSITE[self]

    def mirrored_lr(self) -> "Edge":
        """Edge after mirroring across the vertical centerline."""
        return {Edge.LEFT: Edge.RIGHT, Edge.RIGHT: Edge.LEFT}.get(self, self)

    def mirrored_tb(self) -> "Edge":
        """Edge after mirroring across the horizontal centerline."""
        return {Edge.TOP: Edge.BOTTOM, Edge.BOTTOM: Edge.TOP}.get(self, self)

    def rotated_cw(self) -> "Edge":
        """Edge after a clockwise quarter-turn of the box."""
        return _ROTATED_CW[self]


_OPPOSITE = {Edge.TOP: Edge.BOTTOM, Edge.BOTTOM: Edge.TOP,
             Edge.RIGHT: Edge.LEFT, Edge.LEFT: Edge.RIGHT}
_ROTATED_CW = {Edge.RIGHT: Edge.BOTTOM, Edge.BOTTOM: Edge.LEFT,
               Edge.LEFT: Edge.TOP, Edge.TOP: Edge.RIGHT}


Path = tuple[str, ...]


class PortRef(NamedTuple):
    path: Path
    port: str

    def dotted(self) -> str:
        return ".".join(self.path + (self.port,))


def parse_port_ref(dotted: str) -> PortRef:
    parts = tuple(dotted.split("."))
    if len(parts) < 2:
        raise ValueError(f"port reference {dotted!r} needs element.port form")
    return PortRef(parts[:-1], parts[-1])


@dataclass(frozen=True)
class PortSpec:
    id: str
    domain: EnergyDomain
    connection_kind: str = "indirect"  # "direct" | "indirect"
    offset: tuple[float, float] | None = None  # (a0, b0); components only


@dataclass(frozen=True)
class FixedPose:
    """Anchors an element: constant center and orientation binaries."""

    x: float
    y: float
    m: int = 0
    n: int = 0
    r: int = 0


@dataclass
class ElementSpec:
    id: str
    kind: str  # "component" | "subsystem"
    width: float | None = None   # default width (components)
    length: float | None = None  # default length (components)
    ports: list[PortSpec] = field(default_factory=list)
    children: list["ElementSpec"] = field(default_factory=list)
    fixed_pose: FixedPose | None = None

    @property
    def is_component(self) -> bool:
        return self.kind == "component"


@dataclass(frozen=True)
class Connection:
    source: PortRef
    target: PortRef


@dataclass(frozen=True)
class GroupDirective:
    subsystem: Path
    blocks: int


@dataclass(frozen=True)
class DesignSpace:
    width: float
    length: float


@dataclass
class SystemDescription:
    design_space: DesignSpace
    elements: list[ElementSpec]
    connections: list[Connection]
    groupings: list[GroupDirective] = field(default_factory=list)


class ValidationError(ValueError):
    """Carries every problem found while validating a description."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class Node:
    """One element of the validated tree."""

    path: Path
    spec: ElementSpec
    level: int
    children: list["Node"] = field(default_factory=list)

    @property
    def is_component(self) -> bool:
        return self.spec.is_component


@dataclass(frozen=True)
class ResolvedConnection:
    source: PortRef
    target: PortRef
    domain: EnergyDomain
    kind: str            # "direct" | "indirect"
    level: int           # lambda of the connection (upper level if inter-level)
    same_level: bool


@dataclass(frozen=True)
class InterferencePair:
    parent: Path         # () for the top level
    first: Path          # i, canonical (declaration) order
    second: Path         # j
    index: int           # z, unique within parent


@dataclass
class ValidatedSystem:
    """Canonical immutable view of a system; safe to share read-only."""

    design_space: DesignSpace
    roots: list[Node]
    nodes: dict[Path, Node]
    levels: list[list[Node]]                  # V_lambda, index = lambda
    n_levels: int                             # deepest lambda
    connections: list[ResolvedConnection]
    pairs_by_parent: dict[Path, list[InterferencePair]]
    port_edges: dict[PortRef, Edge]           # mechanical component ports only

    @property
    def all_pairs(self) -> list[InterferencePair]:
        out: list[InterferencePair] = []
        for parent in sorted(self.pairs_by_parent):
            out.extend(self.pairs_by_parent[parent])
        return out

    def pair_of(self, a: Path, b: Path) -> InterferencePair | None:
        parent = a[:-1]
        if b[:-1] != parent:
            return None
        for pair in self.pairs_by_parent.get(parent, []):
            if {pair.first, pair.second} == {a, b}:
                return pair
        return None

    def port_spec(self, ref: PortRef) -> PortSpec:
        node = self.nodes[ref.path]
        for port in node.spec.ports:
            if port.id == ref.port:
                return port
        raise KeyError(ref.dotted())

    def connections_by_domain(self, domain: EnergyDomain,
                              same_level: bool | None = None
                              ) -> list[ResolvedConnection]:
        return [c for c in self.connections
                if c.domain is domain
                and (same_level is None or c.same_level == same_level)]


def interference_pairs(parent: "Node | ValidatedSystem") -> list[InterferencePair]:
    """All unordered same-parent pairs, in declaration order, z-indexed.

    Pairs are generated within each subsystem and within the top level only,
    never across sibling subsystems.
    """
    if isinstance(parent, ValidatedSystem):
        parent_path: Path = ()
        children = [n.path for n in parent.roots]
    else:
        parent_path = parent.path
        children = [n.path for n in parent.children]
    pairs = []
    z = 0
    for i in range(len(children)):
        for j in range(i + 1, len(children)):
            pairs.append(InterferencePair(parent_path, children[i], children[j], z))
            z += 1
    return pairs


def _boundary_edge(port: PortSpec, width: float, length: float,
                   errors: list[str], where: str) -> Edge | None:
    a0, b0 = port.offset  # type: ignore[misc]
    eps = 1e-9 * max(1.0, width, length)
    inside_w = abs(a0) <= width / 2 + eps
    inside_l = abs(b0) <= length / 2 + eps
    if not (inside_w and inside_l):
        errors.append(f"{where}: port not on boundary (offset outside element box)")
        return None
    on_lr = abs(abs(a0) - width / 2) <= eps
    on_tb = abs(abs(b0) - length / 2) <= eps
    if port.domain is EnergyDomain.ELECTRICAL:
        return None  # electrical ports may sit anywhere in the box
    if on_lr and on_tb:
        errors.append(f"{where}: port not on boundary (corner placement is ambiguous)")
        return None
    if on_lr:
        return Edge.RIGHT if a0 > 0 else Edge.LEFT
    if on_tb:
        return Edge.TOP if b0 > 0 else Edge.BOTTOM
    errors.append(f"{where}: port not on boundary (mechanical ports sit on an edge)")
    return None


def validate(description: SystemDescription) -> ValidatedSystem:
    """Check structure and build the canonical tree with level indices.

    Raises ValidationError listing every problem found.
    """
    errors: list[str] = []
    nodes: dict[Path, Node] = {}
    levels: dict[int, list[Node]] = {}
    port_edges: dict[PortRef, Edge] = {}

    ds = description.design_space
    if ds.width <= 0 or ds.length <= 0:
        errors.append("design space dimensions must be positive")
    if not description.elements:
        errors.append("no elements")

    def walk(spec: ElementSpec, path: Path, level: int) -> Node:
        node = Node(path, spec, level)
        if path in nodes:
            errors.append(f"{'.'.join(path)}: duplicate element id within parent")
        nodes[path] = node
        levels.setdefault(level, []).append(node)
        seen_ports: set[str] = set()
        for port in spec.ports:
            if port.id in seen_ports:
                errors.append(f"{'.'.join(path)}.{port.id}: duplicate port id")
            seen_ports.add(port.id)
            if port.connection_kind not in ("direct", "indirect"):
                errors.append(f"{'.'.join(path)}.{port.id}: unknown connection kind "
                              f"{port.connection_kind!r}")
        if spec.is_component:
            if spec.children:
                errors.append(f"{'.'.join(path)}: component with children")
            if spec.width is None or spec.length is None or \
                    (spec.width or 0) <= 0 or (spec.length or 0) <= 0:
                errors.append(f"{'.'.join(path)}: component needs positive default dimensions")
            else:
                for port in spec.ports:
                    where = f"{'.'.join(path)}.{port.id}"
                    if port.offset is None:
                        errors.append(f"{where}: component port needs a fixed offset")
                        continue
                    edge = _boundary_edge(port, spec.width, spec.length, errors, where)
                    if edge is not None:
                        port_edges[PortRef(path, port.id)] = edge
        else:
            if len(spec.children) < 2:
                errors.append(f"{'.'.join(path)}: subsystem with < 2 children")
            if spec.width is not None or spec.length is not None:
                errors.append(f"{'.'.join(path)}: subsystem dimensions are decision "
                              "variables, not inputs")
            if spec.fixed_pose is not None:
                errors.append(f"{'.'.join(path)}: fixed pose is only supported on components")
            for port in spec.ports:
                if port.offset is not None:
                    errors.append(f"{'.'.join(path)}.{port.id}: subsystem port offsets "
                                  "are decision variables, not inputs")
            for child in spec.children:
                node.children.append(walk(child, path + (child.id,), level + 1))
        return node

    roots = [walk(spec, (spec.id,), 0) for spec in description.elements]

    def resolve_port(ref: PortRef) -> PortSpec | None:
        node = nodes.get(ref.path)
        if node is None:
            return None
        for port in node.spec.ports:
            if port.id == ref.port:
                return port
        return None

    resolved: list[ResolvedConnection] = []
    for conn in description.connections:
        sp = resolve_port(conn.source)
        tp = resolve_port(conn.target)
        if sp is None or tp is None:
            bad = conn.source if sp is None else conn.target
            errors.append(f"{bad.dotted()}: dangling port reference")
            continue
        if sp.domain is not tp.domain:
            errors.append(f"{conn.source.dotted()} -> {conn.target.dotted()}: "
                          "domain mismatch")
            continue
        if sp.connection_kind != tp.connection_kind:
            errors.append(f"{conn.source.dotted()} -> {conn.target.dotted()}: "
                          "connection kind mismatch (direct vs indirect)")
            continue
        src_level = len(conn.source.path) - 1
        tgt_level = len(conn.target.path) - 1
        if src_level == tgt_level:
            if sp.domain is EnergyDomain.MECHANICAL and \
                    conn.source.path[:-1] != conn.target.path[:-1]:
                errors.append(f"{conn.source.dotted()} -> {conn.target.dotted()}: "
                              "mechanical connection crosses parent scopes")
                continue
            resolved.append(ResolvedConnection(conn.source, conn.target, sp.domain,
                                               sp.connection_kind, src_level, True))
        else:
            upper, lower = conn.source, conn.target
            if src_level > tgt_level:
                upper, lower = lower, upper
            if lower.path[:-1] != upper.path:
                errors.append(f"{conn.source.dotted()} -> {conn.target.dotted()}: "
                              "inter-level connection not parent-to-own-child")
                continue
            resolved.append(ResolvedConnection(upper, lower, sp.domain,
                                               sp.connection_kind,
                                               len(upper.path) - 1, False))

    if errors:
        raise ValidationError(errors)

    n_levels = max(levels)
    level_list = [levels.get(i, []) for i in range(n_levels + 1)]
    validated = ValidatedSystem(ds, roots, nodes, level_list, n_levels,
                                resolved, {}, port_edges)
    pairs: dict[Path, list[InterferencePair]] = {(): interference_pairs(validated)}
    for node in nodes.values():
        if not node.is_component:
            pairs[node.path] = interference_pairs(node)
    validated.pairs_by_parent = pairs
    return validated


def _ports_equal(a: Sequence[PortSpec], b: Sequence[PortSpec]) -> bool:
    return list(a) == list(b)


def group_elements(description: SystemDescription,
                   directives: Iterable[GroupDirective]) -> SystemDescription:
    """Replace runs of identical chained children by composite blocks.

    Each directive groups the k identical components of a subsystem, connected
    in a series chain, into g blocks of k/g modules laid out in a row. The
    blocks' surviving ports are re-exposed at the positions the module ports
    occupy inside the row.
    """
    desc = SystemDescription(description.design_space,
                             list(description.elements),
                             list(description.connections),
                             [])
    for directive in directives:
        desc = _apply_grouping(desc, directive)
    return desc


def _apply_grouping(desc: SystemDescription, d: GroupDirective) -> SystemDescription:
    parent_path = d.subsystem

    def find(specs: list[ElementSpec], path: Path) -> ElementSpec | None:
        for spec in specs:
            if spec.id == path[0]:
                if len(path) == 1:
                    return spec
                return find(spec.children, path[1:])
        return None

    sub = find(desc.elements, parent_path)
    if sub is None or sub.is_component:
        raise ValidationError([f"{'.'.join(parent_path)}: grouping target is not a subsystem"])
    k = len(sub.children)
    g = d.blocks
    if g < 1 or k % g != 0:
        raise ValidationError([f"{'.'.join(parent_path)}: g does not divide k ({g} vs {k})"])
    first = sub.children[0]
    for child in sub.children[1:]:
        same = (child.kind == first.kind and child.width == first.width
                and child.length == first.length and child.fixed_pose is None
                and _ports_equal(child.ports, first.ports))
        if not same:
            raise ValidationError([f"{'.'.join(parent_path)}: non-identical children"])
    if not first.is_component:
        raise ValidationError([f"{'.'.join(parent_path)}: grouping needs component children"])

    order = _chain_order(sub, parent_path, desc.connections)
    size = k // g
    blocks = [order[b * size:(b + 1) * size] for b in range(g)]
    module_block: dict[str, tuple[int, int]] = {}
    for b, members in enumerate(blocks):
        for slot, module_id in enumerate(members):
            module_block[module_id] = (b, slot)

    w0, l0 = first.width, first.length  # type: ignore[assignment]

    def block_port_ref(ref: PortRef) -> PortRef:
        b, slot = module_block[ref.path[len(parent_path)]]
        return PortRef(parent_path + (f"block{b + 1}",), f"{ref.path[-1]}_{ref.port}")

    def in_group(ref: PortRef) -> bool:
        return (len(ref.path) == len(parent_path) + 1
                and ref.path[:len(parent_path)] == parent_path)

    # Rewrite connections; drop the ones fully internal to one block.
    new_connections: list[Connection] = []
    used_ports: set[PortRef] = set()
    for conn in desc.connections:
        s_in, t_in = in_group(conn.source), in_group(conn.target)
        if s_in and t_in:
            bs = module_block[conn.source.path[len(parent_path)]][0]
            bt = module_block[conn.target.path[len(parent_path)]][0]
            if bs == bt:
                continue  # frozen inside a block
        ns = block_port_ref(conn.source) if s_in else conn.source
        nt = block_port_ref(conn.target) if t_in else conn.target
        if s_in:
            used_ports.add(ns)
        if t_in:
            used_ports.add(nt)
        new_connections.append(Connection(ns, nt))

    port_by_id = {p.id: p for p in first.ports}
    new_children: list[ElementSpec] = []
    for b, members in enumerate(blocks):
        ports: list[PortSpec] = []
        for slot, module_id in enumerate(members):
            shift = (slot - (size - 1) / 2) * w0
            for port in first.ports:
                ref = PortRef(parent_path + (f"block{b + 1}",), f"{module_id}_{port.id}")
                if ref not in used_ports:
                    continue
                a0, b0 = port.offset  # type: ignore[misc]
                ports.append(PortSpec(ref.port, port.domain, port.connection_kind,
                                      (a0 + shift, b0)))
        new_children.append(ElementSpec(f"block{b + 1}", "component",
                                        width=size * w0, length=l0, ports=ports))

    def rebuild(specs: list[ElementSpec], path: Path) -> list[ElementSpec]:
        out = []
        for spec in specs:
            here = path + (spec.id,)
            if here == parent_path:
                out.append(replace(spec, children=new_children))
            elif spec.children:
                out.append(replace(spec, children=rebuild(spec.children, here)))
            else:
                out.append(spec)
        return out

    return SystemDescription(desc.design_space,
                             rebuild(desc.elements, ()),
                             new_connections,
                             [])


def _chain_order(sub: ElementSpec, parent_path: Path,
                 connections: list[Connection]) -> list[str]:
    """Order of the series chain among a subsystem's children."""
    ids = [c.id for c in sub.children]
    idset = set(ids)
    adj: dict[str, list[str]] = {i: [] for i in ids}
    for conn in connections:
        sp, tp = conn.source.path, conn.target.path
        if (len(sp) == len(parent_path) + 1 and sp[:-1] == parent_path
                and len(tp) == len(parent_path) + 1 and tp[:-1] == parent_path
                and sp[-1] in idset and tp[-1] in idset):
            adj[sp[-1]].append(tp[-1])
            adj[tp[-1]].append(sp[-1])
    endpoints = [i for i in ids if len(adj[i]) == 1]
    if len(endpoints) != 2 or any(len(adj[i]) > 2 for i in ids):
        raise ValidationError([f"{'.'.join(parent_path)}: children are not connected "
                               "in a series chain"])
    start = endpoints[0] if ids.index(endpoints[0]) < ids.index(endpoints[1]) else endpoints[1]
    order = [start]
    prev = None
    while len(order) < len(ids):
        nxts = [n for n in adj[order[-1]] if n != prev]
        if not nxts:
            raise ValidationError([f"{'.'.join(parent_path)}: children are not connected "
                                   "in a series chain"])
        prev = order[-1]
        order.append(nxts[0])
    return order
