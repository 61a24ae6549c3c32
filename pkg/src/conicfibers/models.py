"""Geometrically ruled models reachable from a main fiber by contractions.

Every way of contracting a main fiber down to a single smooth fiber
component picks out one geometrically ruled model; kind-A chains admit one
model per component, kind-D forks exactly two.  The degree of the image
surface drops by one per blow-up, giving the level-L degree formula.
"""
from __future__ import annotations

from dataclasses import dataclass

from .fibers import FiberConfig, canonical_form
from .enumeration import main_fiber
from .transforms import TransformError, blow_down


class ModelError(ValueError):
    """Input is not a main fiber, or a contraction order does not replay."""


@dataclass(frozen=True)
class ModelDescriptor:
    """One geometrically ruled model: the surviving component, a witness
    contraction order, and the length of the elementary-transformation
    chain from the reference model."""

    survivor: str
    contraction_order: tuple[str, ...]
    elm_chain_length: int


@dataclass(frozen=True)
class SurfaceLevel:
    """Degenerate-fiber census of a surface: (kind, level) per fiber."""

    fibers: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        normalized = []
        for kind, level in self.fibers:
            kind = kind.upper()
            if kind not in {"A", "D"}:
                raise ValueError(f"fiber kind must be 'A' or 'D', got {kind!r}")
            if level < 1:
                raise ValueError("each degenerate fiber has level >= 1")
            normalized.append((kind, level))
        object.__setattr__(self, "fibers", tuple(normalized))

    @property
    def total_level(self) -> int:
        return sum(level for _, level in self.fibers)


def _fiber_kind(config: FiberConfig) -> str | None:
    """'A' or 'D' when the config is a main fiber of its level, else None."""
    level = config.level
    if level < 1:
        return None
    key = canonical_form(config)
    if key == canonical_form(main_fiber("A", level)):
        return "A"
    if level >= 2 and key == canonical_form(main_fiber("D", level)):
        return "D"
    return None


def grc_models(config: FiberConfig) -> list[ModelDescriptor]:
    """All geometrically ruled models obtained by fully contracting the
    main fiber onto one surviving component.

    Each descriptor's contraction order replays through blow-downs and
    leaves the survivor with self-intersection 0 and multiplicity 1.
    """
    kind = _fiber_kind(config)
    if kind is None:
        raise ModelError("model enumeration needs a main fiber")

    models = []
    for candidate in config.ids:
        order = _contraction_order(config, candidate)
        if order is None:
            continue
        models.append(
            ModelDescriptor(candidate, order, _elm_length(config, kind, candidate))
        )
    return models


def _contraction_order(config: FiberConfig, survivor: str) -> tuple[str, ...] | None:
    """Depth-first search for a full contraction keeping the survivor."""

    def search(current: FiberConfig, done: tuple[str, ...]):
        if len(current.components) == 1:
            last = current.components[0]
            if last.id == survivor and last.self_int == 0 and last.mult == 1:
                return done
            return None
        for c in current.components:
            if c.id == survivor or c.self_int != -1:
                continue
            try:
                nxt = blow_down(current, c.id)
            except TransformError:
                continue
            found = search(nxt, done + (c.id,))
            if found is not None:
                return found
        return None

    return search(config, ())


def _elm_length(config: FiberConfig, kind: str, survivor: str) -> int:
    if kind == "D":
        reduced = [c.id for c in config.components if c.mult == 1]
        return reduced.index(survivor)
    # kind A: distance along the chain from the reference end (the end
    # appearing first in component order)
    ends = [c.id for c in config.components if len(config.neighbors(c.id)) <= 1]
    reference = ends[0]
    distance = 0
    prev, cur = None, reference
    while cur != survivor:
        following = [nb for nb in config.neighbors(cur) if nb != prev]
        prev, cur = cur, following[0]
        distance += 1
    return distance


def count_models(surface: SurfaceLevel) -> int:
    """Number of geometrically ruled models of a surface with the given
    degenerate fibers: (level + 1) per kind-A fiber, 2 per kind-D fiber,
    and 2 per level-1 fiber regardless of kind."""
    total = 1
    for kind, level in surface.fibers:
        if level == 1 or kind == "D":
            total *= 2
        else:
            total *= level + 1
    return total


def degree_of_image(d_self_initial: int, surface: SurfaceLevel) -> int:
    """Degree of the image surface: the reference model's degree minus the
    total level.  Assumes every degenerate fiber is main, so the bisecant
    system has no base locus."""
    return d_self_initial - surface.total_level
