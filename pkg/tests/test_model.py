import math
import random

import pytest

from conftest import FIXTURES, mech_port, two_component_system
from powerplace import fileio
from powerplace.model import (Connection, DesignSpace, Edge, ElementSpec,
                              EnergyDomain, GroupDirective, PortRef, PortSpec,
                              SystemDescription, ValidationError,
                              group_elements, interference_pairs, validate)


def test_fig1_topology_validates():
    system = validate(fileio.parse_system(FIXTURES / "fig1.system"))
    subsystems = [n for n in system.nodes.values() if not n.is_component]
    assert len(subsystems) == 3
    assert system.n_levels == 1
    battery = system.nodes[("battery",)]
    assert len(battery.children) == 24
    for tr in (("tr_l",), ("tr_r",)):
        assert len(system.nodes[tr].children) == 2


def test_component_with_children_rejected():
    bad = ElementSpec("c", "component", 1, 1,
                      children=[ElementSpec("x", "component", 1, 1)])
    with pytest.raises(ValidationError, match="component with children"):
        validate(SystemDescription(DesignSpace(5, 5), [bad], []))


def test_domain_mismatch_rejected():
    a = ElementSpec("a", "component", 2, 1, ports=[mech_port("s", 2, 1, "right")])
    b = ElementSpec("b", "component", 2, 1,
                    ports=[PortSpec("s", EnergyDomain.ELECTRICAL, "indirect", (0.0, 0.0))])
    desc = SystemDescription(
        DesignSpace(8, 8), [a, b],
        [Connection(PortRef(("a",), "s"), PortRef(("b",), "s"))])
    with pytest.raises(ValidationError, match="domain mismatch"):
        validate(desc)


def test_dangling_port_reference():
    desc = two_component_system()
    desc.connections.append(Connection(PortRef(("a",), "s"), PortRef(("ghost",), "s")))
    with pytest.raises(ValidationError, match="dangling port reference"):
        validate(desc)


def test_subsystem_needs_two_children():
    sub = ElementSpec("s", "subsystem",
                      children=[ElementSpec("only", "component", 1, 1)])
    with pytest.raises(ValidationError, match="subsystem with < 2 children"):
        validate(SystemDescription(DesignSpace(5, 5), [sub], []))


def test_mechanical_port_off_boundary_rejected():
    bad = ElementSpec("a", "component", 2, 1,
                      ports=[PortSpec("s", EnergyDomain.MECHANICAL, "indirect", (0.3, 0.1))])
    with pytest.raises(ValidationError, match="port not on boundary"):
        validate(SystemDescription(DesignSpace(5, 5), [bad], []))


def test_port_edges_derived():
    system = validate(two_component_system())
    assert system.port_edges[PortRef(("a",), "s")] is Edge.RIGHT
    assert system.port_edges[PortRef(("b",), "s")] is Edge.LEFT


def test_pair_counts():
    def flat(n):
        elems = [ElementSpec(f"e{i}", "component", 1, 1) for i in range(n)]
        return validate(SystemDescription(DesignSpace(50, 50), elems, []))

    assert len(interference_pairs(flat(4))) == 6
    assert len(interference_pairs(flat(1))) == 0
    assert len(interference_pairs(flat(8))) == 28


def test_pair_count_matches_combinatorics_on_random_hierarchies():
    rng = random.Random(7)
    for _ in range(10):
        roots = []
        expected = 0
        n_top = rng.randint(1, 6)
        for i in range(n_top):
            if rng.random() < 0.4:
                k = rng.randint(2, 6)
                children = [ElementSpec(f"c{j}", "component", 1, 1) for j in range(k)]
                roots.append(ElementSpec(f"s{i}", "subsystem", children=children))
                expected += k * (k - 1) // 2
            else:
                roots.append(ElementSpec(f"e{i}", "component", 1, 1))
        expected += n_top * (n_top - 1) // 2
        system = validate(SystemDescription(DesignSpace(100, 100), roots, []))
        total = sum(len(v) for v in system.pairs_by_parent.values())
        assert total == expected


def test_level_partition():
    system = validate(fileio.parse_system(FIXTURES / "fig1.system"))
    seen = set()
    for nodes in system.levels:
        for node in nodes:
            assert node.path not in seen
            seen.add(node.path)
    assert seen == set(system.nodes)
    for conn in system.connections:
        src_level = len(conn.source.path) - 1
        tgt_level = len(conn.target.path) - 1
        if conn.same_level:
            assert src_level == tgt_level
        else:
            assert tgt_level == src_level + 1


def _battery_chain(k):
    mods = [ElementSpec(f"m{i:02d}", "component", 1.0, 2.0,
                        ports=[PortSpec("in", EnergyDomain.ELECTRICAL, "indirect", (-0.5, 0)),
                               PortSpec("out", EnergyDomain.ELECTRICAL, "indirect", (0.5, 0))])
            for i in range(1, k + 1)]
    sub = ElementSpec("pack", "subsystem",
                      ports=[PortSpec("dc", EnergyDomain.ELECTRICAL, "indirect")],
                      children=mods)
    other = ElementSpec("load", "component", 2, 2,
                        ports=[PortSpec("dc", EnergyDomain.ELECTRICAL, "indirect", (0, 0))])
    conns = [Connection(PortRef(("pack",), "dc"), PortRef(("load",), "dc")),
             Connection(PortRef(("pack",), "dc"), PortRef(("pack", "m01"), "in"))]
    conns += [Connection(PortRef(("pack", f"m{i:02d}"), "out"),
                         PortRef(("pack", f"m{i+1:02d}"), "in"))
              for i in range(1, k)]
    return SystemDescription(DesignSpace(60, 60), [sub, other], conns)


def test_grouping_24_into_4_blocks():
    desc = _battery_chain(24)
    grouped = group_elements(desc, [GroupDirective(("pack",), 4)])
    system = validate(grouped)
    pack = system.nodes[("pack",)]
    assert len(pack.children) == 4
    for block in pack.children:
        assert block.spec.width == pytest.approx(6 * 1.0)
        assert block.spec.length == pytest.approx(2.0)
    # series connectivity: chain endpoints survive, 3 inter-block links remain
    internal = [c for c in system.connections
                if c.same_level and c.source.path[:-1] == ("pack",)]
    assert len(internal) == 3
    inter_level = [c for c in system.connections if not c.same_level]
    assert len(inter_level) == 1
    assert inter_level[0].target == PortRef(("pack", "block1"), "m01_in")


def test_grouping_preserves_module_count_and_endpoints():
    desc = _battery_chain(12)
    grouped = group_elements(desc, [GroupDirective(("pack",), 3)])
    pack = next(e for e in grouped.elements if e.id == "pack")
    covered = sum(round(b.width / 1.0) for b in pack.children)
    assert covered == 12
    refs = {c.source.dotted() for c in grouped.connections}
    refs |= {c.target.dotted() for c in grouped.connections}
    assert "pack.block1.m01_in" in refs


def test_grouping_identity():
    desc = _battery_chain(6)
    grouped = group_elements(desc, [GroupDirective(("pack",), 6)])
    pack = next(e for e in grouped.elements if e.id == "pack")
    assert len(pack.children) == 6
    for block in pack.children:
        assert block.width == pytest.approx(1.0)
        assert block.length == pytest.approx(2.0)
    validate(grouped)


def test_grouping_non_divisor_rejected():
    desc = _battery_chain(24)
    with pytest.raises(ValidationError, match="g does not divide k"):
        group_elements(desc, [GroupDirective(("pack",), 5)])


def test_grouping_non_identical_children_rejected():
    desc = _battery_chain(4)
    pack = next(e for e in desc.elements if e.id == "pack")
    pack.children[2] = ElementSpec("m03", "component", 1.5, 2.0,
                                   ports=pack.children[2].ports)
    with pytest.raises(ValidationError, match="non-identical children"):
        group_elements(desc, [GroupDirective(("pack",), 2)])


def test_grouped_fig1_matches_case_study_shape():
    desc = fileio.parse_system(FIXTURES / "fig1.system")
    system = validate(group_elements(desc, [GroupDirective(("battery",), 4)]))
    battery = system.nodes[("battery",)]
    assert len(battery.children) == 4
    assert all(c.spec.width == pytest.approx(6 * 170) for c in battery.children)
    total_pairs = sum(len(v) for v in system.pairs_by_parent.values())
    # 14 top-level elements, 4 battery blocks, 2 x 2 gear pairs
    assert total_pairs == math.comb(14, 2) + math.comb(4, 2) + 2 * math.comb(2, 2)
