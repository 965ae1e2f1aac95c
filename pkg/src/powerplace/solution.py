"""Solution documents: solved geometry, objective breakdown, solver statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .formulation import Formulation
from .model import EnergyDomain
from .solver import MipSolution


def sig9(value: float) -> float:
    """Round to 9 significant digits (the file-format precision)."""
    return float(f"{value:.9g}")


@dataclass
class ElementPlacement:
    path: str
    kind: str
    level: int
    x: float
    y: float
    width: float
    length: float
    m: int | None = None
    n: int | None = None
    r: int | None = None


@dataclass
class PortPlacement:
    port: str          # dotted element.port
    domain: str
    x: float
    y: float


@dataclass
class ConnectionRoute:
    source: str
    target: str
    domain: str
    kind: str
    length_l1: float
    length_euclidean: float


@dataclass
class SolutionDocument:
    status: str
    design_space: tuple[float, float]
    objective: float
    j_connections: float
    j_dimensions: float
    bound: float
    gap: float | None
    nodes: int
    wall_time: float | None
    elements: list[ElementPlacement] = field(default_factory=list)
    ports: list[PortPlacement] = field(default_factory=list)
    connections: list[ConnectionRoute] = field(default_factory=list)
    variables: dict[str, float] = field(default_factory=dict)


def build_solution_document(formulation: Formulation, result: MipSolution,
                            deterministic: bool = True) -> SolutionDocument:
    """Extract geometry and the objective breakdown from a solved assignment."""
    if result.assignment is None:
        raise ValueError(f"no assignment to document (status {result.status})")
    x = result.assignment
    vm, system = formulation.varmap, formulation.system
    elements: list[ElementPlacement] = []
    ports: list[PortPlacement] = []
    j_dim = 0.0
    for path, node in system.nodes.items():
        dotted = ".".join(path)
        placement = ElementPlacement(
            dotted, node.spec.kind, node.level,
            sig9(x[vm.x[path]]), sig9(x[vm.y[path]]),
            sig9(x[vm.w[path]]), sig9(x[vm.l[path]]))
        if node.is_component:
            placement.r = int(round(x[vm.r[path]]))
            placement.m = int(round(x[vm.m[path]]))
            placement.n = int(round(x[vm.n[path]]))
        else:
            j_dim += x[vm.w[path]] + x[vm.l[path]]
        elements.append(placement)
        for port in node.spec.ports:
            ref_key = (path, port.id)
            ax = x[vm.x[path]] + x[vm.a[ref_key]]
            ay = x[vm.y[path]] + x[vm.b[ref_key]]
            ports.append(PortPlacement(f"{dotted}.{port.id}", port.domain.value,
                                       sig9(ax), sig9(ay)))

    port_pos = {p.port: (p.x, p.y) for p in ports}
    routes: list[ConnectionRoute] = []
    j_con = 0.0
    for conn in system.connections:
        sx, sy = port_pos[conn.source.dotted()]
        tx, ty = port_pos[conn.target.dotted()]
        dx, dy = sx - tx, sy - ty
        l1 = abs(dx) + abs(dy)
        routes.append(ConnectionRoute(conn.source.dotted(), conn.target.dotted(),
                                      conn.domain.value, conn.kind,
                                      sig9(l1), sig9(math.hypot(dx, dy))))
        j_con += l1

    variables = {v.name: sig9(x[i])
                 for i, v in enumerate(formulation.model.variables)}
    return SolutionDocument(
        status=result.status,
        design_space=(system.design_space.width, system.design_space.length),
        objective=sig9(result.objective),
        j_connections=sig9(j_con),
        j_dimensions=sig9(j_dim),
        bound=sig9(result.bound) if math.isfinite(result.bound) else result.bound,
        gap=None if result.gap is None else sig9(result.gap),
        nodes=result.nodes,
        wall_time=None if deterministic else result.wall_time,
        elements=elements,
        ports=ports,
        connections=routes,
        variables=variables)


def assignment_from_document(doc: SolutionDocument, model) -> np.ndarray:
    """Rebuild the full variable vector of a (possibly imported) document."""
    x = np.zeros(len(model.variables))
    missing = []
    for i, v in enumerate(model.variables):
        if v.name in doc.variables:
            x[i] = doc.variables[v.name]
        else:
            missing.append(v.name)
    if missing:
        raise ValueError(f"document misses {len(missing)} variable(s), "
                         f"e.g. {missing[:3]}")
    return x
