"""Serialization: .system input files and .solution documents.

A .system file is a YAML document with sections `design_space`, `elements`
(recursive), `connections` and optional `grouping`. Lengths are millimeters;
identifiers are dotted paths (e.g. battery.block2.m06_out). All text is UTF-8
and numbers are written with 9 significant digits.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path as FsPath

import yaml

from .model import (Connection, DesignSpace, ElementSpec, EnergyDomain,
                    FixedPose, GroupDirective, PortSpec, SystemDescription,
                    parse_port_ref)
from .solution import (ConnectionRoute, ElementPlacement, PortPlacement,
                       SolutionDocument, sig9)


class SystemFormatError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _num(value, where: str, errors: list[str]) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{where}: expected a number, got {value!r}")
        return 0.0
    return float(value)


def _parse_port(raw, where: str, errors: list[str]) -> PortSpec | None:
    if not isinstance(raw, dict) or "id" not in raw:
        errors.append(f"{where}: port needs a mapping with an id")
        return None
    domain_raw = raw.get("domain")
    try:
        domain = EnergyDomain(domain_raw)
    except ValueError:
        errors.append(f"{where}.{raw.get('id')}: unknown energy domain {domain_raw!r}")
        return None
    kind = raw.get("connection", "indirect")
    offset = raw.get("offset")
    if offset is not None:
        if not (isinstance(offset, (list, tuple)) and len(offset) == 2):
            errors.append(f"{where}.{raw['id']}: offset needs two numbers")
            offset = None
        else:
            offset = (_num(offset[0], where, errors), _num(offset[1], where, errors))
    return PortSpec(str(raw["id"]), domain, str(kind), offset)


def _parse_element(raw, where: str, errors: list[str]) -> ElementSpec | None:
    if not isinstance(raw, dict) or "id" not in raw or "kind" not in raw:
        errors.append(f"{where}: element needs id and kind")
        return None
    elem_id = str(raw["id"])
    if "." in elem_id:
        errors.append(f"{where}.{elem_id}: element ids must not contain dots")
    kind = str(raw["kind"])
    here = f"{where}.{elem_id}" if where else elem_id
    if kind not in ("component", "subsystem"):
        errors.append(f"{here}: unknown kind {kind!r}")
        return None
    width = length = None
    if "width" in raw:
        width = _num(raw["width"], f"{here}.width", errors)
        if width <= 0:
            errors.append(f"{here}: negative or zero width")
    if "length" in raw:
        length = _num(raw["length"], f"{here}.length", errors)
        if length <= 0:
            errors.append(f"{here}: negative or zero length")
    ports = []
    for praw in raw.get("ports", []) or []:
        port = _parse_port(praw, here, errors)
        if port is not None:
            ports.append(port)
    children = []
    for craw in raw.get("children", []) or []:
        child = _parse_element(craw, here, errors)
        if child is not None:
            children.append(child)
    pose = None
    if "fixed_pose" in raw:
        fp = raw["fixed_pose"]
        if not isinstance(fp, dict) or "x" not in fp or "y" not in fp:
            errors.append(f"{here}.fixed_pose: needs x and y")
        else:
            pose = FixedPose(_num(fp["x"], here, errors), _num(fp["y"], here, errors),
                             int(fp.get("m", 0)), int(fp.get("n", 0)),
                             int(fp.get("r", 0)))
    return ElementSpec(elem_id, kind, width, length, ports, children, pose)


def parse_system_text(text: str) -> SystemDescription:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SystemFormatError([f"not valid YAML: {exc}"])
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise SystemFormatError(["top level must be a mapping"])
    ds_raw = raw.get("design_space")
    if not isinstance(ds_raw, dict) or "width" not in ds_raw or "length" not in ds_raw:
        errors.append("design_space: needs width and length")
        design = DesignSpace(0, 0)
    else:
        w = _num(ds_raw["width"], "design_space.width", errors)
        l = _num(ds_raw["length"], "design_space.length", errors)
        if w <= 0 or l <= 0:
            errors.append("design_space: negative or zero dimensions")
        design = DesignSpace(w, l)
    elements_raw = raw.get("elements")
    elements: list[ElementSpec] = []
    if not elements_raw:
        errors.append("no elements")
    else:
        for eraw in elements_raw:
            elem = _parse_element(eraw, "", errors)
            if elem is not None:
                elements.append(elem)
    connections: list[Connection] = []
    for i, craw in enumerate(raw.get("connections", []) or []):
        where = f"connections[{i}]"
        if not isinstance(craw, dict) or "from" not in craw or "to" not in craw:
            errors.append(f"{where}: needs from and to")
            continue
        try:
            connections.append(Connection(parse_port_ref(str(craw["from"])),
                                          parse_port_ref(str(craw["to"]))))
        except ValueError as exc:
            errors.append(f"{where}: {exc}")
    groupings: list[GroupDirective] = []
    for i, graw in enumerate(raw.get("grouping", []) or []):
        where = f"grouping[{i}]"
        if not isinstance(graw, dict) or "subsystem" not in graw or "blocks" not in graw:
            errors.append(f"{where}: needs subsystem and blocks")
            continue
        groupings.append(GroupDirective(tuple(str(graw["subsystem"]).split(".")),
                                        int(graw["blocks"])))
    if errors:
        raise SystemFormatError(errors)
    return SystemDescription(design, elements, connections, groupings)


def parse_system(path) -> SystemDescription:
    return parse_system_text(FsPath(path).read_text(encoding="utf-8"))


def _port_to_raw(port: PortSpec) -> dict:
    raw = {"id": port.id, "domain": port.domain.value,
           "connection": port.connection_kind}
    if port.offset is not None:
        raw["offset"] = [sig9(port.offset[0]), sig9(port.offset[1])]
    return raw


def _element_to_raw(spec: ElementSpec) -> dict:
    raw: dict = {"id": spec.id, "kind": spec.kind}
    if spec.width is not None:
        raw["width"] = sig9(spec.width)
    if spec.length is not None:
        raw["length"] = sig9(spec.length)
    if spec.fixed_pose is not None:
        fp = spec.fixed_pose
        raw["fixed_pose"] = {"x": sig9(fp.x), "y": sig9(fp.y),
                             "m": fp.m, "n": fp.n, "r": fp.r}
    if spec.ports:
        raw["ports"] = [_port_to_raw(p) for p in spec.ports]
    if spec.children:
        raw["children"] = [_element_to_raw(c) for c in spec.children]
    return raw


def serialize_system(desc: SystemDescription) -> str:
    raw = {
        "design_space": {"width": sig9(desc.design_space.width),
                         "length": sig9(desc.design_space.length)},
        "elements": [_element_to_raw(e) for e in desc.elements],
        "connections": [{"from": c.source.dotted(), "to": c.target.dotted()}
                        for c in desc.connections],
    }
    if desc.groupings:
        raw["grouping"] = [{"subsystem": ".".join(g.subsystem), "blocks": g.blocks}
                           for g in desc.groupings]
    return yaml.safe_dump(raw, sort_keys=False, default_flow_style=False)


def write_system(desc: SystemDescription, path) -> None:
    FsPath(path).write_text(serialize_system(desc), encoding="utf-8")


def write_solution(doc: SolutionDocument, path=None) -> str:
    text = json.dumps(dataclasses.asdict(doc), indent=1)
    if path is not None:
        FsPath(path).write_text(text, encoding="utf-8")
    return text


def read_solution(path) -> SolutionDocument:
    raw = json.loads(FsPath(path).read_text(encoding="utf-8"))
    try:
        return SolutionDocument(
            status=raw["status"],
            design_space=tuple(raw["design_space"]),
            objective=raw["objective"],
            j_connections=raw["j_connections"],
            j_dimensions=raw["j_dimensions"],
            bound=raw["bound"],
            gap=raw.get("gap"),
            nodes=raw["nodes"],
            wall_time=raw.get("wall_time"),
            elements=[ElementPlacement(**e) for e in raw["elements"]],
            ports=[PortPlacement(**p) for p in raw["ports"]],
            connections=[ConnectionRoute(**c) for c in raw["connections"]],
            variables=dict(raw["variables"]))
    except (KeyError, TypeError) as exc:
        raise SystemFormatError([f"not a valid solution document: {exc}"])
