"""Labeled intersection graphs of degenerate conic-bundle fibers.

A fiber configuration is a connected multigraph whose vertices carry a
self-intersection number, a multiplicity in the fiber cycle, and the
intersection degree against the bisecant hyperplane system.  Everything in
this package operates on these immutable values.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

CanonicalKey = bytes

#: cap on permutation candidates explored by canonical_form
_PERMUTATION_BUDGET = 1_000_000


class ConfigError(ValueError):
    """Base class for fiber-configuration errors."""


class ParseError(ConfigError):
    """Malformed config document (syntax or schema)."""


class DuplicateIdError(ParseError):
    """Two components share an id."""


class EdgeError(ParseError):
    """Bad intersection entry: self-loop, unknown endpoint, bad count."""


class InvariantError(ConfigError):
    """A structurally well-formed config violates fiber invariants."""

    def __init__(self, report: "ValidationReport"):
        super().__init__("; ".join(report.violations))
        self.report = report


class SizeLimitError(ConfigError):
    """Config too large for exhaustive canonicalization."""


@dataclass(frozen=True)
class ComponentRecord:
    """One irreducible fiber component with its numerical labels."""

    id: str
    self_int: int
    mult: int
    d_deg: int

    def label(self) -> tuple[int, int, int]:
        return (self.self_int, self.mult, self.d_deg)


def _normalize_edges(
    components: tuple[ComponentRecord, ...],
    intersections,
) -> tuple[tuple[str, str, int], ...]:
    pos = {c.id: i for i, c in enumerate(components)}
    if isinstance(intersections, Mapping):
        items = [(a, b, k) for (a, b), k in intersections.items()]
    else:
        items = [(a, b, k) for a, b, k in intersections]
    seen: dict[tuple[str, str], int] = {}
    for a, b, k in items:
        if a == b:
            raise EdgeError(f"self-loop on component {a!r}")
        if a not in pos or b not in pos:
            missing = a if a not in pos else b
            raise EdgeError(f"edge endpoint {missing!r} is not a component")
        if not isinstance(k, int) or isinstance(k, bool) or k < 0:
            raise EdgeError(f"intersection number {a!r}-{b!r} must be a non-negative integer")
        key = (a, b) if pos[a] < pos[b] else (b, a)
        if key in seen:
            raise EdgeError(f"duplicate or asymmetric edge {key[0]!r}-{key[1]!r}")
        seen[key] = k
    pairs = [(a, b, k) for (a, b), k in seen.items() if k > 0]
    pairs.sort(key=lambda e: (pos[e[0]], pos[e[1]]))
    return tuple(pairs)


@dataclass(frozen=True)
class FiberConfig:
    """Immutable fiber configuration.

    ``intersections`` holds one entry per meeting pair, normalized to
    component order; ``d_self`` optionally tracks the self-intersection of
    the ambient bisecant system for degree bookkeeping.
    """

    components: tuple[ComponentRecord, ...]
    intersections: tuple[tuple[str, str, int], ...] = ()
    d_self: int | None = None

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise ConfigError("a fiber needs at least one component")
        ids = [c.id for c in components]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DuplicateIdError(f"duplicate component id {dup!r}")
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "intersections", _normalize_edges(components, self.intersections))

    @cached_property
    def _pos(self) -> dict[str, int]:
        return {c.id: i for i, c in enumerate(self.components)}

    @cached_property
    def _edge_map(self) -> dict[tuple[str, str], int]:
        m: dict[tuple[str, str], int] = {}
        for a, b, k in self.intersections:
            m[a, b] = k
            m[b, a] = k
        return m

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.components)

    @property
    def level(self) -> int:
        """Blow-up level: components beyond the original fiber."""
        return len(self.components) - 1

    def component(self, cid: str) -> ComponentRecord:
        try:
            return self.components[self._pos[cid]]
        except KeyError:
            raise ConfigError(f"unknown component id {cid!r}") from None

    def index_of(self, cid: str) -> int:
        try:
            return self._pos[cid]
        except KeyError:
            raise ConfigError(f"unknown component id {cid!r}") from None

    def pairing(self, a: str, b: str) -> int:
        """Intersection number of two distinct components (0 if disjoint)."""
        if a == b:
            raise ConfigError("pairing is defined for distinct components; use self_int")
        self.index_of(a), self.index_of(b)
        return self._edge_map.get((a, b), 0)

    def neighbors(self, cid: str) -> tuple[str, ...]:
        self.index_of(cid)
        return tuple(
            c.id for c in self.components if c.id != cid and self._edge_map.get((cid, c.id), 0) > 0
        )

    def mult_vector(self) -> tuple[int, ...]:
        return tuple(c.mult for c in self.components)

    def degree_vector(self) -> tuple[int, ...]:
        return tuple(c.d_deg for c in self.components)


@dataclass(frozen=True)
class ValidationReport:
    """Every violated invariant, by name; empty means valid."""

    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def new_smooth_fiber(d_self: int | None = None) -> FiberConfig:
    """The undegenerated fiber: one component with self-intersection 0,
    multiplicity 1 and bisecant degree 2."""
    return FiberConfig(
        components=(ComponentRecord("f0", self_int=0, mult=1, d_deg=2),),
        intersections=(),
        d_self=d_self,
    )


def validate(config: FiberConfig) -> ValidationReport:
    """Check connectivity, numerical triviality of the fiber cycle, and the
    bisecant balance.  Never raises; collects every violation."""
    violations: list[str] = []

    for c in config.components:
        if c.mult < 1:
            violations.append(f"multiplicity: component {c.id} has mult {c.mult} < 1")

    # connectivity of the support graph
    ids = config.ids
    seen = {ids[0]}
    frontier = [ids[0]]
    while frontier:
        cur = frontier.pop()
        for nb in config.neighbors(cur):
            if nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    if len(seen) != len(ids):
        violations.append("connectivity: support graph is disconnected")

    matrix = intersection_matrix(config)
    mu = config.mult_vector()
    for i, row in enumerate(matrix):
        val = sum(r * m for r, m in zip(row, mu))
        if val != 0:
            violations.append(
                f"numerical triviality: row {config.components[i].id} gives {val}, expected 0"
            )

    balance = sum(c.mult * c.d_deg for c in config.components)
    if balance != 2:
        violations.append(f"bisecant balance: sum(mult*d_deg) = {balance}, expected 2")

    return ValidationReport(tuple(violations))


def intersection_matrix(config: FiberConfig) -> list[list[int]]:
    """Symmetric matrix of pairwise intersections with self-intersections on
    the diagonal, in component order."""
    n = len(config.components)
    ids = config.ids
    matrix = [[0] * n for _ in range(n)]
    for i, c in enumerate(config.components):
        matrix[i][i] = c.self_int
    for i in range(n):
        for j in range(i + 1, n):
            k = config.pairing(ids[i], ids[j])
            matrix[i][j] = k
            matrix[j][i] = k
    return matrix


def _refinement_classes(config: FiberConfig) -> list[list[int]]:
    """Partition vertex indices by label and iterated neighborhood structure.

    Classes come out in a deterministic, relabeling-invariant order; any
    label-preserving isomorphism maps classes to classes positionally.
    """
    n = len(config.components)
    adj = intersection_matrix(config)
    colors: list = [c.label() for c in config.components]
    while True:
        signature = [
            (
                colors[i],
                tuple(sorted((colors[j], adj[i][j]) for j in range(n) if j != i and adj[i][j])),
            )
            for i in range(n)
        ]
        ranking = {sig: rank for rank, sig in enumerate(sorted(set(signature)))}
        new_colors = [ranking[sig] for sig in signature]
        if _partition(new_colors) == _partition(colors):
            colors = new_colors
            break
        colors = new_colors

    classes: dict[int, list[int]] = {}
    for i, col in enumerate(colors):
        classes.setdefault(col, []).append(i)
    return [classes[c] for c in sorted(classes)]


def _partition(colors: list) -> frozenset:
    groups: dict = {}
    for i, col in enumerate(colors):
        groups.setdefault(col, []).append(i)
    return frozenset(frozenset(g) for g in groups.values())


def canonical_form(config: FiberConfig, max_components: int = 16) -> CanonicalKey:
    """Byte string equal for two configs iff they are label-preserving
    isomorphic.  Exhaustive permutation minimization within refinement
    classes; intended for the small graphs this domain produces."""
    n = len(config.components)
    if n > max_components:
        raise SizeLimitError(f"{n} components exceeds the canonicalization cap {max_components}")

    classes = _refinement_classes(config)
    candidates = math.prod(math.factorial(len(c)) for c in classes)
    if candidates > _PERMUTATION_BUDGET:
        raise SizeLimitError(f"{candidates} orderings exceed the canonicalization budget")

    labels = [c.label() for c in config.components]
    adj = intersection_matrix(config)
    best = None
    for combo in itertools.product(*(itertools.permutations(c) for c in classes)):
        order = [i for group in combo for i in group]
        encoding = (
            tuple(labels[i] for i in order),
            tuple(adj[order[i]][order[j]] for i in range(n) for j in range(i + 1, n)),
        )
        if best is None or encoding < best:
            best = encoding
    return repr(best).encode("ascii")


def automorphisms(config: FiberConfig) -> list[dict[str, str]]:
    """All label- and intersection-preserving relabelings of the config."""
    ids = config.ids
    adj = intersection_matrix(config)
    classes = _refinement_classes(config)
    n = len(ids)
    result = []
    for combo in itertools.product(*(itertools.permutations(c) for c in classes)):
        perm = [0] * n
        for group, image in zip(classes, combo):
            for src, dst in zip(group, image):
                perm[src] = dst
        if all(
            adj[i][j] == adj[perm[i]][perm[j]] for i in range(n) for j in range(i + 1, n)
        ):
            result.append({ids[i]: ids[perm[i]] for i in range(n)})
    return result


def serialize(config: FiberConfig) -> str:
    """Render a config as the JSON document accepted by :func:`parse`."""
    doc: dict = {
        "components": [
            {"id": c.id, "self_int": c.self_int, "mult": c.mult, "d_deg": c.d_deg}
            for c in config.components
        ],
        "edges": [[a, b, k] for a, b, k in config.intersections],
    }
    if config.d_self is not None:
        doc["d_self"] = config.d_self
    return json.dumps(doc, indent=2) + "\n"


def _require_int(value, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{what} must be an integer, got {value!r}")
    return value


def parse(text: str) -> FiberConfig:
    """Parse and validate a config document.

    Raises :class:`ParseError` (or a subclass) for malformed documents and
    :class:`InvariantError` when the parsed config violates fiber invariants.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("config document must be an object")
    unknown = set(doc) - {"components", "edges", "d_self"}
    if unknown:
        raise ParseError(f"unknown fields: {sorted(unknown)}")
    if "components" not in doc or "edges" not in doc:
        raise ParseError("config document needs 'components' and 'edges'")
    if not isinstance(doc["components"], list) or not isinstance(doc["edges"], list):
        raise ParseError("'components' and 'edges' must be arrays")

    components = []
    for entry in doc["components"]:
        if not isinstance(entry, dict):
            raise ParseError(f"component entry must be an object, got {entry!r}")
        extra = set(entry) - {"id", "self_int", "mult", "d_deg"}
        if extra:
            raise ParseError(f"unknown component fields: {sorted(extra)}")
        try:
            cid = entry["id"]
            self_int = entry["self_int"]
            mult = entry["mult"]
            d_deg = entry["d_deg"]
        except KeyError as exc:
            raise ParseError(f"component entry missing field {exc}") from exc
        if not isinstance(cid, str):
            raise ParseError(f"component id must be a string, got {cid!r}")
        components.append(
            ComponentRecord(
                cid,
                _require_int(self_int, f"self_int of {cid!r}"),
                _require_int(mult, f"mult of {cid!r}"),
                _require_int(d_deg, f"d_deg of {cid!r}"),
            )
        )

    edges = []
    for entry in doc["edges"]:
        if not isinstance(entry, list) or len(entry) != 3:
            raise EdgeError(f"edge entry must be [idA, idB, k], got {entry!r}")
        a, b, k = entry
        if not isinstance(a, str) or not isinstance(b, str):
            raise EdgeError(f"edge endpoints must be strings, got {entry!r}")
        _require_int(k, f"intersection number of {a!r}-{b!r}")
        if k < 1:
            raise EdgeError(f"intersection number of {a!r}-{b!r} must be >= 1")
        edges.append((a, b, k))

    d_self = None
    if "d_self" in doc:
        d_self = _require_int(doc["d_self"], "d_self")

    config = FiberConfig(tuple(components), tuple(edges), d_self)
    report = validate(config)
    if not report.ok:
        raise InvariantError(report)
    return config
