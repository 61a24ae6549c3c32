"""From a fiber configuration to its image fiber and singularities.

The bisecant system may have base components on a degenerate fiber; after
subtracting them, components of reduced degree zero contract to points.
Each connected contracted cluster is either a smooth point or a rational
double point whose type is read off the dual graph of its (-2)-core.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .fibers import FiberConfig

ATTACH_COMMON = "common_point"
ATTACH_LINE = "on_line"
ATTACH_DOUBLE = "on_double_line"
ATTACH_CONIC = "on_conic"


class ResolutionError(ValueError):
    """Base class for resolution failures."""


class BaseLocusError(ResolutionError):
    """Base-locus fixpoint did not terminate within the iteration cap."""


class ShapeError(ResolutionError):
    """Surviving components do not form a degree-2 image fiber."""


class TableError(ResolutionError):
    """Report does not match any row of the fiber classification."""


class FiberShape(str, Enum):
    SMOOTH_CONIC = "smooth_conic"
    TWO_DISTINCT_LINES = "two_distinct_lines"
    DOUBLE_LINE = "double_line"


@dataclass(frozen=True)
class Singularity:
    """A contracted cluster's type: smooth point, A(n), D(n), or a
    violation of the expected classification (with a description)."""

    kind: str  # "smooth" | "A" | "D" | "violation"
    n: int = 0
    detail: str = ""

    @classmethod
    def smooth(cls) -> "Singularity":
        return cls("smooth")

    @classmethod
    def a_type(cls, n: int) -> "Singularity":
        return cls("A", n)

    @classmethod
    def d_type(cls, n: int) -> "Singularity":
        return cls("D", n)

    @classmethod
    def violation(cls, detail: str) -> "Singularity":
        return cls("violation", 0, detail)

    def __str__(self) -> str:
        if self.kind == "smooth":
            return "smooth"
        if self.kind == "violation":
            return f"violation({self.detail})"
        return f"{self.kind}{self.n}"


@dataclass(frozen=True)
class BaseLocus:
    """Multiset of components subtracted from the bisecant system."""

    entries: tuple[tuple[str, int], ...] = ()

    def __bool__(self) -> bool:
        return bool(self.entries)

    @property
    def total(self) -> int:
        return sum(k for _, k in self.entries)

    @property
    def has_repeats(self) -> bool:
        """True when some component was subtracted more than once; the
        classification examples only ever subtract single copies."""
        return any(k > 1 for _, k in self.entries)

    def count(self, cid: str) -> int:
        for name, k in self.entries:
            if name == cid:
                return k
        return 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.entries)


@dataclass(frozen=True)
class FiberReport:
    """Image fiber shape plus located singularities.

    ``singularities`` pairs each non-smooth contracted cluster with an
    attachment describing where it sits on the image fiber.
    """

    image_shape: FiberShape
    singularities: tuple[tuple[Singularity, str], ...]
    base_locus: BaseLocus
    contracted_smooth_points: int
    survivors: tuple[str, ...]


def base_locus(
    config: FiberConfig, max_iterations: int | None = None
) -> tuple[BaseLocus, tuple[int, ...]]:
    """Subtract negative-degree components one copy at a time until every
    degree is non-negative.

    Returns the subtracted multiset and the reduced degree vector in
    component order.  The result does not depend on the subtraction order;
    the implementation picks the first negative component each round.
    """
    ids = config.ids
    matrix = _row_map(config)
    degrees = dict(zip(ids, config.degree_vector()))
    counts: dict[str, int] = {}
    cap = max_iterations if max_iterations is not None else 10 * len(ids)

    iterations = 0
    while True:
        target = next((cid for cid in ids if degrees[cid] < 0), None)
        if target is None:
            break
        iterations += 1
        if iterations > cap:
            raise BaseLocusError(
                f"base locus did not stabilize within {cap} subtractions"
            )
        counts[target] = counts.get(target, 0) + 1
        for cid in ids:
            degrees[cid] -= matrix[target][cid]

    entries = tuple((cid, counts[cid]) for cid in ids if cid in counts)
    return BaseLocus(entries), tuple(degrees[cid] for cid in ids)


def _row_map(config: FiberConfig) -> dict[str, dict[str, int]]:
    ids = config.ids
    rows: dict[str, dict[str, int]] = {}
    for a in ids:
        row = {}
        for b in ids:
            row[b] = config.component(a).self_int if a == b else config.pairing(a, b)
        rows[a] = row
    return rows


def contraction_clusters(
    config: FiberConfig, reduced: Sequence[int]
) -> tuple[tuple[str, ...], ...]:
    """Connected components of the degree-zero part of the fiber, each in
    component order; clusters ordered by their first component."""
    ids = config.ids
    if len(reduced) != len(ids):
        raise ResolutionError("reduced degree vector does not match the config")
    if any(d < 0 for d in reduced):
        raise ResolutionError("reduced degrees must be non-negative")
    zero = [cid for cid, d in zip(ids, reduced) if d == 0]
    zero_set = set(zero)
    clusters = []
    unassigned = set(zero)
    for seed in zero:
        if seed not in unassigned:
            continue
        members = {seed}
        frontier = [seed]
        while frontier:
            cur = frontier.pop()
            for nb in config.neighbors(cur):
                if nb in zero_set and nb not in members:
                    members.add(nb)
                    frontier.append(nb)
        unassigned -= members
        clusters.append(tuple(cid for cid in ids if cid in members))
    return tuple(clusters)


def classify_cluster(config: FiberConfig, cluster: Sequence[str]) -> Singularity:
    """Contract (-1)-components inside the cluster and read the result.

    An emptied cluster is a smooth point.  A fixpoint of (-2)-components is
    matched against the A/D dual graphs after an explicit negative
    definiteness check; anything else is a classification violation.
    """
    order = list(cluster)
    selfs = {cid: config.component(cid).self_int for cid in order}
    adj: dict[frozenset, int] = {}
    for i, a in enumerate(order):
        for b in order[i + 1 :]:
            k = config.pairing(a, b)
            if k:
                adj[frozenset((a, b))] = k

    while True:
        target = next((cid for cid in order if selfs[cid] == -1), None)
        if target is None:
            break
        hits = {
            cid: adj.get(frozenset((cid, target)), 0) for cid in order if cid != target
        }
        order.remove(target)
        del selfs[target]
        adj = {pair: k for pair, k in adj.items() if target not in pair}
        for cid in order:
            selfs[cid] += hits[cid] ** 2
        for i, a in enumerate(order):
            for b in order[i + 1 :]:
                bump = hits[a] * hits[b]
                if bump:
                    pair = frozenset((a, b))
                    adj[pair] = adj.get(pair, 0) + bump

    if not order:
        return Singularity.smooth()

    bad = [cid for cid in order if selfs[cid] != -2]
    if bad:
        return Singularity.violation(
            f"contraction fixpoint contains {bad[0]} with self-intersection {selfs[bad[0]]}"
        )
    if any(k > 1 for k in adj.values()):
        return Singularity.violation("exceptional components meet more than once")

    minors = _cluster_matrix(order, selfs, adj)
    if not _is_negative_definite(minors):
        return Singularity.violation("exceptional lattice is not negative definite")

    return _match_dual_graph(order, adj)


def _cluster_matrix(order, selfs, adj) -> list[list[int]]:
    n = len(order)
    matrix = [[0] * n for _ in range(n)]
    for i, a in enumerate(order):
        matrix[i][i] = selfs[a]
        for j in range(i + 1, n):
            k = adj.get(frozenset((a, order[j])), 0)
            matrix[i][j] = k
            matrix[j][i] = k
    return matrix


def _det(matrix: list[list[int]]) -> int:
    """Exact integer determinant by fraction-free elimination."""
    m = [row[:] for row in matrix]
    n = len(m)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[-1][-1]


def _is_negative_definite(matrix: list[list[int]]) -> bool:
    """Leading principal minors must alternate in sign, starting negative."""
    for k in range(1, len(matrix) + 1):
        minor = _det([row[:k] for row in matrix[:k]])
        if minor == 0 or (minor > 0) != (k % 2 == 0):
            return False
    return True


def _match_dual_graph(order: list[str], adj: dict[frozenset, int]) -> Singularity:
    degrees = {cid: 0 for cid in order}
    neighbors = {cid: [] for cid in order}
    for pair in adj:
        a, b = tuple(pair)
        degrees[a] += 1
        degrees[b] += 1
        neighbors[a].append(b)
        neighbors[b].append(a)

    seen = {order[0]}
    frontier = [order[0]]
    while frontier:
        for nb in neighbors[frontier.pop()]:
            if nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    if len(seen) != len(order):
        return Singularity.violation("contracted cluster is disconnected")

    if max(degrees.values()) <= 2:
        if len(order) > 1 and all(d == 2 for d in degrees.values()):
            return Singularity.violation("exceptional dual graph is a cycle")
        return Singularity.a_type(len(order))

    forks = [cid for cid in order if degrees[cid] >= 3]
    if len(forks) == 1 and degrees[forks[0]] == 3:
        lengths = sorted(_branch_length(forks[0], start, neighbors) for start in neighbors[forks[0]])
        if lengths[:2] == [1, 1]:
            return Singularity.d_type(len(order))
    return Singularity.violation("exceptional dual graph is neither a path nor a fork")


def _branch_length(fork: str, start: str, neighbors: dict[str, list[str]]) -> int:
    length = 1
    prev, cur = fork, start
    while True:
        nxt = [nb for nb in neighbors[cur] if nb != prev]
        if not nxt:
            return length
        prev, cur = cur, nxt[0]
        length += 1


def resolve(config: FiberConfig) -> FiberReport:
    """Full pipeline: base locus, surviving image shape, and one classified
    singularity (or smooth point) per contracted cluster."""
    locus, reduced = base_locus(config)
    ids = config.ids
    survivors = tuple(cid for cid, d in zip(ids, reduced) if d > 0)
    shape = _image_shape(config, survivors, dict(zip(ids, reduced)))

    placed: list[tuple[Singularity, str]] = []
    smooth_points = 0
    for cluster in contraction_clusters(config, reduced):
        singularity = classify_cluster(config, cluster)
        if singularity.kind == "smooth":
            smooth_points += 1
            continue
        placed.append((singularity, _attachment(config, cluster, survivors, shape)))

    return FiberReport(shape, tuple(placed), locus, smooth_points, survivors)


def _image_shape(
    config: FiberConfig, survivors: tuple[str, ...], reduced: dict[str, int]
) -> FiberShape:
    data = sorted((config.component(s).mult, reduced[s]) for s in survivors)
    if data == [(1, 2)]:
        return FiberShape.SMOOTH_CONIC
    if data == [(2, 1)]:
        return FiberShape.DOUBLE_LINE
    if data == [(1, 1), (1, 1)]:
        return FiberShape.TWO_DISTINCT_LINES
    total = sum(m * d for m, d in data)
    raise ShapeError(
        f"survivors carry (mult, degree) = {data} with total degree {total}, expected 2"
    )


def _attachment(
    config: FiberConfig,
    cluster: tuple[str, ...],
    survivors: tuple[str, ...],
    shape: FiberShape,
) -> str:
    touched = {
        s for s in survivors if any(config.pairing(member, s) for member in cluster)
    }
    if shape is FiberShape.TWO_DISTINCT_LINES:
        return ATTACH_COMMON if len(touched) == 2 else ATTACH_LINE
    if shape is FiberShape.DOUBLE_LINE:
        return ATTACH_DOUBLE
    return ATTACH_CONIC


def embedded_level(report: FiberReport) -> int:
    """Minimal blow-up level that produces this image fiber.

    Inverts the classification table; raises :class:`TableError` for any
    shape/singularity combination outside it.
    """
    sings = report.singularities
    if any(s.kind == "violation" for s, _ in sings):
        raise TableError("report contains a classification violation")

    if report.image_shape is FiberShape.SMOOTH_CONIC:
        if not sings:
            return 0
    elif report.image_shape is FiberShape.TWO_DISTINCT_LINES:
        if not sings:
            return 1
        if len(sings) == 1:
            singularity, attachment = sings[0]
            if singularity.kind == "A" and attachment == ATTACH_COMMON:
                return singularity.n + 1
    else:
        if len(sings) == 2 and all(
            s.kind == "A" and s.n == 1 and att == ATTACH_DOUBLE for s, att in sings
        ):
            return 2
        if len(sings) == 1:
            singularity, attachment = sings[0]
            if attachment == ATTACH_DOUBLE:
                if singularity.kind == "A" and singularity.n == 3:
                    return 3
                if singularity.kind == "D" and singularity.n >= 4:
                    return singularity.n

    described = ", ".join(f"{s}@{att}" for s, att in sings) or "no singularities"
    raise TableError(
        f"{report.image_shape.value} with {described} is outside the classification table"
    )


def image_signature(report: FiberReport) -> tuple:
    """Shape plus sorted singularity data; equal for two reports exactly
    when they describe the same image fiber."""
    return (
        report.image_shape.value,
        tuple(sorted((s.kind, s.n, att) for s, att in report.singularities)),
    )


def signature_label(report: FiberReport) -> str:
    parts = [f"{s}@{att}" for s, att in sorted(
        report.singularities, key=lambda pair: (pair[0].kind, pair[0].n, pair[1])
    )]
    if not parts:
        return report.image_shape.value
    return report.image_shape.value + " + " + " + ".join(parts)


def report_document(report: FiberReport) -> dict:
    """JSON-ready form of a report; ``embedded_level`` is null when the
    report falls outside the classification table."""
    try:
        level = embedded_level(report)
    except TableError:
        level = None
    singularities = []
    for singularity, attachment in report.singularities:
        entry = {
            "type": singularity.kind,
            "n": singularity.n,
            "attachment": attachment,
        }
        if singularity.kind == "violation":
            entry["detail"] = singularity.detail
        singularities.append(entry)
    return {
        "image_shape": report.image_shape.value,
        "singularities": singularities,
        "base_locus": [[cid, k] for cid, k in report.base_locus.entries],
        "embedded_level": level,
    }


def serialize_report(report: FiberReport) -> str:
    return json.dumps(report_document(report), indent=2) + "\n"


def parse_report(text: str) -> dict:
    """Validate a serialized report document and return it as a dict."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ResolutionError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ResolutionError("report document must be an object")
    unknown = set(doc) - {"image_shape", "singularities", "base_locus", "embedded_level"}
    if unknown:
        raise ResolutionError(f"unknown report fields: {sorted(unknown)}")
    try:
        FiberShape(doc["image_shape"])
    except (KeyError, ValueError):
        raise ResolutionError("report needs a valid 'image_shape'") from None
    entries = doc.get("singularities")
    if not isinstance(entries, list):
        raise ResolutionError("report needs a 'singularities' array")
    for entry in entries:
        if (
            not isinstance(entry, dict)
            or entry.get("type") not in {"A", "D", "smooth", "violation"}
            or not isinstance(entry.get("n"), int)
            or not isinstance(entry.get("attachment"), str)
        ):
            raise ResolutionError(f"bad singularity entry: {entry!r}")
    locus = doc.get("base_locus")
    if not isinstance(locus, list) or not all(
        isinstance(e, list) and len(e) == 2 and isinstance(e[0], str)
        and isinstance(e[1], int) and e[1] >= 1
        for e in locus
    ):
        raise ResolutionError("report needs a 'base_locus' array of [id, count]")
    if not (doc.get("embedded_level") is None or isinstance(doc["embedded_level"], int)):
        raise ResolutionError("'embedded_level' must be an integer or null")
    return doc
