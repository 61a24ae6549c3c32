"""Blow-ups at combinatorial centers and contraction of (-1)-components.

Both directions keep the fiber-cycle bookkeeping exact: multiplicities obey
total-transform additivity, every component through a center loses one from
its self-intersection and one from its bisecant degree, and the exceptional
component always enters with self-intersection -1 and degree +1.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .fibers import ComponentRecord, FiberConfig


class TransformError(ValueError):
    """Invalid center, contraction, or script directive."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class SmoothPoint:
    """A generic point of one component, lying on no other component."""

    component: str


@dataclass(frozen=True)
class Node:
    """One transversal intersection point of two meeting components."""

    first: str
    second: str


BlowUpCenter = SmoothPoint | Node

BlowUpScript = tuple[BlowUpCenter, ...]

_EXC_ID = re.compile(r"^e(\d+)$")


def _fresh_id(config: FiberConfig) -> str:
    used = [int(m.group(1)) for c in config.components if (m := _EXC_ID.match(c.id))]
    return f"e{max(used, default=0) + 1}"


def blow_up(config: FiberConfig, center: BlowUpCenter) -> FiberConfig:
    """Blow up one point of the fiber and return the new configuration.

    The exceptional component receives the total multiplicity of the center
    and bisecant degree 1; each component through the center drops by one in
    self-intersection and degree.  A tracked ``d_self`` drops by one.
    """
    edges = {(a, b): k for a, b, k in config.intersections}
    new_id = _fresh_id(config)

    if isinstance(center, SmoothPoint):
        host = config.component(center.component)
        through = {host.id}
        exc_mult = host.mult
    elif isinstance(center, Node):
        if center.first == center.second:
            raise TransformError(f"node center needs two distinct components, got {center.first!r} twice")
        a = config.component(center.first)
        b = config.component(center.second)
        meeting = config.pairing(a.id, b.id)
        if meeting == 0:
            raise TransformError(f"components {a.id!r} and {b.id!r} do not meet")
        if meeting > 1:
            raise TransformError(
                f"components {a.id!r} and {b.id!r} meet {meeting} times; "
                "only transversal single intersections can be blown up"
            )
        through = {a.id, b.id}
        exc_mult = a.mult + b.mult
    else:
        raise TransformError(f"unknown center {center!r}")

    components = []
    for c in config.components:
        if c.id in through:
            components.append(
                ComponentRecord(c.id, c.self_int - 1, c.mult, c.d_deg - 1)
            )
        else:
            components.append(c)
    components.append(ComponentRecord(new_id, self_int=-1, mult=exc_mult, d_deg=1))

    if isinstance(center, Node):
        pair = tuple(sorted(through, key=config.index_of))
        edges[pair] = edges[pair[0], pair[1]] - 1
    for cid in sorted(through, key=config.index_of):
        edges[cid, new_id] = 1

    d_self = None if config.d_self is None else config.d_self - 1
    return FiberConfig(tuple(components), tuple((a, b, k) for (a, b), k in edges.items()), d_self)


def blow_down(config: FiberConfig, component_id: str) -> FiberConfig:
    """Contract a (-1)-component, pushing the bookkeeping forward.

    Remaining components gain (C.E)^2 in self-intersection, (C.E)(C'.E) in
    pairwise intersection and (C.E)*deg(E) in degree; a tracked ``d_self``
    gains deg(E)^2.  Refuses contractions that would break numerical
    triviality of the fiber cycle.
    """
    exc = config.component(component_id)
    if exc.self_int != -1:
        raise TransformError(
            f"component {component_id!r} has self-intersection {exc.self_int}, not -1"
        )

    hits = {c.id: config.pairing(c.id, exc.id) for c in config.components if c.id != exc.id}
    cycle = sum(k * config.component(cid).mult for cid, k in hits.items())
    if cycle != exc.mult:
        raise TransformError(
            f"contracting {component_id!r} breaks the fiber cycle: "
            f"neighbor multiplicities give {cycle}, component carries {exc.mult}"
        )

    components = tuple(
        ComponentRecord(
            c.id,
            c.self_int + hits[c.id] ** 2,
            c.mult,
            c.d_deg + hits[c.id] * exc.d_deg,
        )
        for c in config.components
        if c.id != exc.id
    )
    edges = {
        (a, b): k for a, b, k in config.intersections if exc.id not in (a, b)
    }
    remaining = [c.id for c in components]
    for i, a in enumerate(remaining):
        for b in remaining[i + 1 :]:
            bump = hits[a] * hits[b]
            if bump:
                key = (a, b) if (a, b) in edges else ((b, a) if (b, a) in edges else (a, b))
                edges[key] = edges.get(key, 0) + bump

    d_self = None if config.d_self is None else config.d_self + exc.d_deg**2
    return FiberConfig(components, tuple((a, b, k) for (a, b), k in edges.items()), d_self)


def apply_script(config: FiberConfig, script: BlowUpScript) -> FiberConfig:
    """Left-to-right fold of :func:`blow_up`; reports the first bad step."""
    current = config
    for step, center in enumerate(script):
        try:
            current = blow_up(current, center)
        except (TransformError, ValueError) as exc:
            raise TransformError(str(exc), step=step) from exc
    return current


def available_centers(config: FiberConfig) -> list[BlowUpCenter]:
    """Every combinatorially distinct blow-up center of the config: one
    smooth point per component and one node per meeting pair."""
    centers: list[BlowUpCenter] = [SmoothPoint(c.id) for c in config.components]
    for a, b, k in config.intersections:
        if k == 1:
            centers.append(Node(a, b))
    return centers


def parse_script(text: str) -> BlowUpScript:
    """Parse the one-directive-per-line script DSL.

    ``smooth <id>`` blows up a generic point of a component, ``node <id> <id>``
    an intersection point; ``#`` starts a comment.
    """
    script: list[BlowUpCenter] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "smooth" and len(tokens) == 2:
            script.append(SmoothPoint(tokens[1]))
        elif tokens[0] == "node" and len(tokens) == 3:
            script.append(Node(tokens[1], tokens[2]))
        else:
            raise TransformError(f"line {lineno}: cannot parse directive {raw.strip()!r}")
    return tuple(script)


def format_script(script: BlowUpScript) -> str:
    lines = []
    for center in script:
        if isinstance(center, SmoothPoint):
            lines.append(f"smooth {center.component}")
        else:
            lines.append(f"node {center.first} {center.second}")
    return "\n".join(lines) + ("\n" if lines else "")
