import random
from pathlib import Path

import pytest

from powerplace.model import (Connection, DesignSpace, ElementSpec, EnergyDomain,
                              FixedPose, PortRef, PortSpec, SystemDescription)

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "powerplace" / "fixtures"

_EDGE_OFFSET = {
    "right": lambda w, l, t: (w / 2, (t - 0.5) * l * 0.8),
    "left": lambda w, l, t: (-w / 2, (t - 0.5) * l * 0.8),
    "top": lambda w, l, t: ((t - 0.5) * w * 0.8, l / 2),
    "bottom": lambda w, l, t: ((t - 0.5) * w * 0.8, -l / 2),
}


def mech_port(pid, w, l, edge, t=0.5, kind="indirect"):
    a0, b0 = _EDGE_OFFSET[edge](w, l, t)
    return PortSpec(pid, EnergyDomain.MECHANICAL, kind, (round(a0, 6), round(b0, 6)))


def elec_port(pid, a0=0.0, b0=0.0, kind="indirect"):
    return PortSpec(pid, EnergyDomain.ELECTRICAL, kind, (a0, b0))


def two_component_system(width=10, length=8, connect=True, kind="indirect"):
    """The bundled toy: two components, one mechanical connection."""
    a = ElementSpec("a", "component", 2, 1,
                    ports=[mech_port("s", 2, 1, "right", kind=kind)])
    b = ElementSpec("b", "component", 1.5, 1,
                    ports=[mech_port("s", 1.5, 1, "left", kind=kind)])
    conns = [Connection(PortRef(("a",), "s"), PortRef(("b",), "s"))] if connect else []
    return SystemDescription(DesignSpace(width, length), [a, b], conns)


def random_toy_system(seed: int) -> SystemDescription:
    """Randomized 2-4 element systems with at most 12 free binaries.

    Mixes flat component layouts (some anchored) with a subsystem variant so
    the enumeration oracle exercises containment, port-edge and internal
    alignment rows too.
    """
    rng = random.Random(seed)
    if rng.random() < 0.3:
        return _subsystem_toy(rng)
    n = rng.choice([2, 3, 3, 4])
    W, L = rng.uniform(8, 12), rng.uniform(8, 12)
    n_fixed = {2: 0, 3: 1, 4: 3}[n]
    corners = [(-W / 4, -L / 4), (W / 4, L / 4), (-W / 4, L / 4), (W / 4, -L / 4)]
    elems = []
    for i in range(n):
        w = round(rng.uniform(1.0, 2.0), 2)
        l = round(rng.uniform(1.0, 2.5), 2)
        edge = rng.choice(list(_EDGE_OFFSET))
        domain = EnergyDomain.MECHANICAL if rng.random() < 0.7 else EnergyDomain.ELECTRICAL
        if domain is EnergyDomain.MECHANICAL:
            port = mech_port("s", w, l, edge, t=round(rng.random(), 2))
        else:
            port = elec_port("s", round((rng.random() - 0.5) * w * 0.9, 4), 0.0)
        pose = None
        if i >= n - n_fixed:
            pose = FixedPose(corners[i][0], corners[i][1],
                             rng.randint(0, 1), rng.randint(0, 1), rng.randint(0, 1))
        elems.append(ElementSpec(f"e{i}", "component", w, l, ports=[port],
                                 fixed_pose=pose))
    conns = []
    if elems[0].ports[0].domain is elems[1].ports[0].domain:
        conns.append(Connection(PortRef(("e0",), "s"), PortRef(("e1",), "s")))
    return SystemDescription(DesignSpace(W, L), elems, conns)


def _subsystem_toy(rng: random.Random) -> SystemDescription:
    W, L = rng.uniform(9, 12), rng.uniform(9, 12)
    w1 = round(rng.uniform(1.0, 1.6), 2)
    l1 = round(rng.uniform(1.0, 1.6), 2)
    child1 = ElementSpec("c1", "component", w1, l1,
                         ports=[mech_port("in", w1, l1, rng.choice(["left", "top"])),
                                mech_port("out", w1, l1, "right")])
    child2 = ElementSpec("c2", "component", w1, l1,
                         ports=[mech_port("in", w1, l1, "left")])
    sub = ElementSpec("sub", "subsystem",
                      ports=[PortSpec("p", EnergyDomain.MECHANICAL, "indirect")],
                      children=[child1, child2])
    we = round(rng.uniform(1.0, 2.0), 2)
    ext = ElementSpec("ext", "component", we, we,
                      ports=[mech_port("s", we, we, rng.choice(["right", "bottom"]))],
                      fixed_pose=FixedPose(round(-W / 4, 2), round(-L / 4, 2), 0, 0, 0))
    conns = [
        Connection(PortRef(("ext",), "s"), PortRef(("sub",), "p")),
        Connection(PortRef(("sub",), "p"), PortRef(("sub", "c1"), "in")),
        Connection(PortRef(("sub", "c1"), "out"), PortRef(("sub", "c2"), "in")),
    ]
    return SystemDescription(DesignSpace(W, L), [sub, ext], conns)


@pytest.fixture
def toy2():
    return two_component_system()
