"""Main fibers, exhaustive blow-up enumeration, and classification checks.

Enumeration walks every blow-up sequence from the smooth fiber breadth
first, deduplicating each level by canonical form while keeping one witness
script per isomorphism class.  The verifier resolves every class and checks
that each report lands in the classification table, that only A/D
singularities appear, and that every non-main class reproduces the image of
a lower-level main fiber.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .fibers import (
    CanonicalKey,
    ComponentRecord,
    FiberConfig,
    automorphisms,
    canonical_form,
    new_smooth_fiber,
    serialize,
)
from .resolution import (
    FiberReport,
    FiberShape,
    ResolutionError,
    embedded_level,
    image_signature,
    report_document,
    resolve,
    signature_label,
)
from .transforms import (
    BlowUpCenter,
    BlowUpScript,
    Node,
    SmoothPoint,
    available_centers,
    blow_up,
    format_script,
)

DEFAULT_LEVEL_CAP = 6


class EnumerationCapError(ValueError):
    """Requested level exceeds the configured cap."""


@dataclass(frozen=True)
class EnumEntry:
    """One isomorphism class: canonical key, representative, witness script
    replaying to the representative, and the number of raw sequences that
    reach the class."""

    key: CanonicalKey
    config: FiberConfig
    script: BlowUpScript
    sequences: int


@dataclass(frozen=True)
class EnumerationResult:
    level: int
    entries: tuple[EnumEntry, ...]
    raw_sequences: int

    @property
    def deduped(self) -> int:
        return len(self.entries)

    def keys(self) -> set[CanonicalKey]:
        return {entry.key for entry in self.entries}


@dataclass(frozen=True)
class TheoremReport:
    """Outcome tallies per level plus any classification failures.

    ``violations`` collects reports outside the classification table or
    containing non-A/D singularities; ``claim_failures`` collects non-main
    classes whose image does not match a lower-level main fiber.  Both must
    stay empty on everything reachable by blow-ups.
    """

    max_level: int
    counts: tuple[tuple[int, int, int], ...]  # (level, raw, deduped)
    tallies: tuple[tuple[int, tuple[tuple[str, int], ...]], ...]
    violations: tuple[str, ...]
    claim_failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations and not self.claim_failures

    def document(self) -> dict:
        return {
            "max_level": self.max_level,
            "counts": [
                {"level": lvl, "raw_sequences": raw, "classes": dedup}
                for lvl, raw, dedup in self.counts
            ],
            "tallies": [
                {"level": lvl, "outcomes": dict(pairs)} for lvl, pairs in self.tallies
            ],
            "violations": list(self.violations),
            "claim_failures": list(self.claim_failures),
            "ok": self.ok,
        }


def main_fiber(kind: str, level: int, d_self: int | None = None) -> FiberConfig:
    """Directly construct the level-``n`` main fiber of the given kind.

    Kind A is the chain of reduced components with degree 1 at both ends;
    kind D forks two reduced components into a multiplicity-2 tail and needs
    level at least 2.
    """
    kind = kind.upper()
    if kind not in {"A", "D"}:
        raise ValueError(f"kind must be 'A' or 'D', got {kind!r}")
    if level < 1:
        raise ValueError("main fibers start at level 1")
    if kind == "D" and level < 2:
        raise ValueError("kind D needs level >= 2")

    components: list[ComponentRecord] = []
    edges: list[tuple[str, str, int]] = []
    if kind == "A":
        names = ["f0"] + [f"e{i}" for i in range(1, level + 1)]
        for i, name in enumerate(names):
            end = i in (0, level)
            components.append(
                ComponentRecord(name, self_int=-1 if end else -2, mult=1, d_deg=1 if end else 0)
            )
        edges = [(names[i], names[i + 1], 1) for i in range(level)]
    else:
        components.append(ComponentRecord("f0", self_int=-2, mult=1, d_deg=0))
        components.append(ComponentRecord("e1", self_int=-2, mult=1, d_deg=0))
        for i in range(2, level + 1):
            last = i == level
            components.append(
                ComponentRecord(f"e{i}", self_int=-1 if last else -2, mult=2, d_deg=1 if last else 0)
            )
        edges = [("f0", "e2", 1), ("e1", "e2", 1)]
        edges += [(f"e{i}", f"e{i + 1}", 1) for i in range(2, level)]

    return FiberConfig(tuple(components), tuple(edges), d_self)


def main_fiber_script(kind: str, level: int) -> BlowUpScript:
    """Canonical generating script: replaying it from the smooth fiber
    reproduces :func:`main_fiber` exactly."""
    kind = kind.upper()
    if kind == "A":
        if level < 1:
            raise ValueError("main fibers start at level 1")
        return (SmoothPoint("f0"),) + tuple(SmoothPoint(f"e{i}") for i in range(1, level))
    if kind == "D":
        if level < 2:
            raise ValueError("kind D needs level >= 2")
        return (
            SmoothPoint("f0"),
            Node("f0", "e1"),
        ) + tuple(SmoothPoint(f"e{i}") for i in range(2, level))
    raise ValueError(f"kind must be 'A' or 'D', got {kind!r}")


def main_fiber_keys(level: int) -> set[CanonicalKey]:
    keys = set()
    if level == 0:
        keys.add(canonical_form(new_smooth_fiber()))
        return keys
    keys.add(canonical_form(main_fiber("A", level)))
    if level >= 2:
        keys.add(canonical_form(main_fiber("D", level)))
    return keys


def is_main(config: FiberConfig) -> bool:
    """A config is main iff it is isomorphic to a directly constructed main
    fiber of its level (or is the smooth fiber)."""
    return canonical_form(config) in main_fiber_keys(config.level)


def _admissible(config: FiberConfig, center: BlowUpCenter) -> bool:
    """Main-fiber recursion rule: from level 2 on, the center must avoid
    components of non-positive degree."""
    if isinstance(center, SmoothPoint):
        return config.component(center.component).d_deg >= 1
    return (
        config.component(center.first).d_deg >= 1
        and config.component(center.second).d_deg >= 1
    )


def enumerate_up_to(
    max_level: int,
    include_non_main: bool = True,
    cap: int = DEFAULT_LEVEL_CAP,
) -> list[EnumerationResult]:
    """Breadth-first enumeration of isomorphism classes for every level up
    to ``max_level``; index ``n`` of the result holds level ``n``."""
    if max_level > cap:
        raise EnumerationCapError(f"level {max_level} exceeds the cap {cap}")
    if max_level < 0:
        raise ValueError("max_level must be non-negative")

    base = new_smooth_fiber()
    current: dict[CanonicalKey, EnumEntry] = {
        canonical_form(base): EnumEntry(canonical_form(base), base, (), 1)
    }
    results = [_freeze_level(0, current)]

    for level in range(1, max_level + 1):
        children: dict[CanonicalKey, EnumEntry] = {}
        for entry in current.values():
            centers = available_centers(entry.config)
            if not include_non_main and level >= 3:
                centers = [c for c in centers if _admissible(entry.config, c)]
            for center in centers:
                child = blow_up(entry.config, center)
                key = canonical_form(child)
                known = children.get(key)
                if known is None:
                    children[key] = EnumEntry(
                        key, child, entry.script + (center,), entry.sequences
                    )
                else:
                    children[key] = EnumEntry(
                        key, known.config, known.script, known.sequences + entry.sequences
                    )
        current = children
        results.append(_freeze_level(level, current))
    return results


def _freeze_level(level: int, classes: dict[CanonicalKey, EnumEntry]) -> EnumerationResult:
    entries = tuple(sorted(classes.values(), key=lambda e: e.key))
    return EnumerationResult(level, entries, sum(e.sequences for e in entries))


def enumerate_level(
    level: int,
    include_non_main: bool = True,
    cap: int = DEFAULT_LEVEL_CAP,
) -> EnumerationResult:
    """Isomorphism classes of fibers of exactly the given level."""
    return enumerate_up_to(level, include_non_main, cap)[level]


def center_orbits(config: FiberConfig) -> list[list[BlowUpCenter]]:
    """Group the config's centers into orbits under its automorphisms;
    centers in one orbit produce isomorphic blow-ups."""
    autos = automorphisms(config)
    centers = available_centers(config)
    index = {}
    for center in centers:
        if isinstance(center, SmoothPoint):
            index[("s", center.component)] = center
        else:
            index[("n",) + tuple(sorted((center.first, center.second)))] = center

    orbits: list[list[BlowUpCenter]] = []
    seen: set = set()
    for center in centers:
        if isinstance(center, SmoothPoint):
            key = ("s", center.component)
        else:
            key = ("n",) + tuple(sorted((center.first, center.second)))
        if key in seen:
            continue
        orbit_keys = set()
        for auto in autos:
            if isinstance(center, SmoothPoint):
                orbit_keys.add(("s", auto[center.component]))
            else:
                orbit_keys.add(("n",) + tuple(sorted((auto[center.first], auto[center.second]))))
        seen |= orbit_keys
        orbits.append([index[k] for k in sorted(orbit_keys)])
    return orbits


def _reference_report(level: int, shape: FiberShape) -> FiberReport:
    if level == 0:
        return resolve(new_smooth_fiber())
    kind = "D" if shape is FiberShape.DOUBLE_LINE else "A"
    return resolve(main_fiber(kind, level))


def verify_classification(
    max_level: int, cap: int | None = None
) -> TheoremReport:
    """Resolve every isomorphism class up to ``max_level`` and check the
    full classification; failures are returned as data, never raised."""
    cap = max(cap if cap is not None else DEFAULT_LEVEL_CAP, max_level)
    levels = enumerate_up_to(max_level, include_non_main=True, cap=cap)

    counts = []
    tallies = []
    violations: list[str] = []
    claim_failures: list[str] = []

    for result in levels:
        level = result.level
        counts.append((level, result.raw_sequences, result.deduped))
        outcome: Counter[str] = Counter()
        main_keys = main_fiber_keys(level)
        for entry in result.entries:
            witness = format_script(entry.script).replace("\n", "; ").strip("; ")
            witness = witness or "<smooth fiber>"
            try:
                report = resolve(entry.config)
            except ResolutionError as exc:
                violations.append(f"level {level} [{witness}]: resolve failed: {exc}")
                continue
            outcome[signature_label(report)] += 1

            if any(s.kind == "violation" for s, _ in report.singularities):
                bad = "; ".join(str(s) for s, _ in report.singularities)
                violations.append(f"level {level} [{witness}]: {bad}")
                continue
            try:
                image_level = embedded_level(report)
            except ResolutionError as exc:
                violations.append(f"level {level} [{witness}]: {exc}")
                continue

            if entry.key in main_keys:
                if image_level != level:
                    violations.append(
                        f"level {level} [{witness}]: main fiber resolves to level {image_level}"
                    )
                continue

            if image_level >= level:
                claim_failures.append(
                    f"level {level} [{witness}]: non-main fiber has embedded level {image_level}"
                )
                continue
            reference = _reference_report(image_level, report.image_shape)
            if image_signature(report) != image_signature(reference):
                claim_failures.append(
                    f"level {level} [{witness}]: image {signature_label(report)} does not "
                    f"match the level-{image_level} main fiber"
                )

        tallies.append((level, tuple(sorted(outcome.items()))))

    return TheoremReport(
        max_level=max_level,
        counts=tuple(counts),
        tallies=tuple(tallies),
        violations=tuple(violations),
        claim_failures=tuple(claim_failures),
    )


def export_results(results: list[EnumerationResult], directory: str | Path) -> Path:
    """Write one config file per class plus a manifest tying each class to
    its level, key digest, witness script, and resolved report."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    manifest = []
    for result in results:
        for i, entry in enumerate(result.entries):
            name = f"level{result.level}_{i:03d}.json"
            (root / name).write_text(serialize(entry.config))
            manifest.append(
                {
                    "level": result.level,
                    "key": hashlib.sha256(entry.key).hexdigest(),
                    "config_file": name,
                    "script": format_script(entry.script),
                    "sequences": entry.sequences,
                    "report": report_document(resolve(entry.config)),
                }
            )
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return root
