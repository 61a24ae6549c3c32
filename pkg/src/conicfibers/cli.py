"""Command-line front end.

Subcommands generate fibers, apply blow-up scripts, resolve to image
reports, enumerate and verify the classification, list ruled models, and
render configs as DOT or plain text.  Exit codes: 0 success, 2 usage error,
3 parse/validation error, 4 classification violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .enumeration import (
    EnumerationCapError,
    enumerate_up_to,
    export_results,
    main_fiber,
    verify_classification,
)
from .fibers import ConfigError, FiberConfig, new_smooth_fiber, parse, serialize
from .models import ModelError, grc_models
from .resolution import ResolutionError, resolve, serialize_report
from .transforms import TransformError, apply_script, parse_script

USAGE_ERROR = 2
DATA_ERROR = 3
VIOLATION_ERROR = 4


def _read_config(path: str) -> FiberConfig:
    if path == "-":
        return parse(sys.stdin.read())
    return parse(Path(path).read_text())


def _cmd_gen(args) -> int:
    if args.level == 0:
        config = new_smooth_fiber(d_self=args.d_self)
    else:
        config = main_fiber(args.kind, args.level, d_self=args.d_self)
    sys.stdout.write(serialize(config))
    return 0


def _cmd_blowup(args) -> int:
    config = _read_config(args.config)
    script = parse_script(Path(args.script).read_text())
    sys.stdout.write(serialize(apply_script(config, script)))
    return 0


def _cmd_resolve(args) -> int:
    config = _read_config(args.config)
    sys.stdout.write(serialize_report(resolve(config)))
    return 0


def _cmd_enumerate(args) -> int:
    results = enumerate_up_to(
        args.level, include_non_main=not args.main_only, cap=args.cap
    )
    if args.export:
        export_results(results, args.export)
    result = results[args.level]
    doc = {
        "level": result.level,
        "raw_sequences": result.raw_sequences,
        "classes": [
            {
                "script": [
                    line for line in _script_lines(entry.script)
                ],
                "sequences": entry.sequences,
                "config": json.loads(serialize(entry.config)),
            }
            for entry in result.entries
        ],
    }
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return 0


def _script_lines(script) -> list[str]:
    from .transforms import format_script

    return [line for line in format_script(script).splitlines() if line]


def _cmd_verify(args) -> int:
    report = verify_classification(args.max_level, cap=args.cap)
    sys.stdout.write(json.dumps(report.document(), indent=2) + "\n")
    if not report.ok:
        total = len(report.violations) + len(report.claim_failures)
        print(f"verify: {total} classification failure(s)", file=sys.stderr)
        return VIOLATION_ERROR
    return 0


def _cmd_models(args) -> int:
    config = _read_config(args.config)
    doc = [
        {
            "survivor": m.survivor,
            "contraction_order": list(m.contraction_order),
            "elm_chain_length": m.elm_chain_length,
        }
        for m in grc_models(config)
    ]
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return 0


def render_dot(config: FiberConfig) -> str:
    """DOT graph with one vertex per component, labeled
    ``id (self_int, mult, d_deg)``, and one edge per intersection point."""
    lines = [
        "graph fiber {",
        "  // vertex label: id (self-intersection, multiplicity, bisecant degree)",
        "  node [shape=ellipse];",
    ]
    for c in config.components:
        label = f"{c.id} ({c.self_int}, {c.mult}, {c.d_deg})"
        lines.append(f'  "{c.id}" [label="{label}"];')
    for a, b, k in config.intersections:
        lines.extend(f'  "{a}" -- "{b}";' for _ in range(k))
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_ascii(config: FiberConfig) -> str:
    lines = ["components:"]
    for c in config.components:
        lines.append(f"  {c.id} ({c.self_int}, {c.mult}, {c.d_deg})")
    lines.append("edges:")
    for a, b, k in config.intersections:
        suffix = f" x{k}" if k > 1 else ""
        lines.append(f"  {a} -- {b}{suffix}")
    if config.d_self is not None:
        lines.append(f"d_self: {config.d_self}")
    return "\n".join(lines) + "\n"


def _cmd_render(args) -> int:
    config = _read_config(args.config)
    renderer = render_dot if args.format == "dot" else render_ascii
    sys.stdout.write(renderer(config))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conicfibers",
        description="Degenerate conic-bundle fibers: blow-up calculus, "
        "singularity classification, and ruled-model enumeration.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a main fiber configuration")
    gen.add_argument("--kind", choices=["A", "D"], default="A")
    gen.add_argument("--level", type=int, required=True)
    gen.add_argument("--d-self", type=int, default=None, dest="d_self")
    gen.set_defaults(func=_cmd_gen)

    blowup = sub.add_parser("blowup", help="apply a blow-up script to a config")
    blowup.add_argument("config", help="config file, or - for stdin")
    blowup.add_argument("script", help="script file (smooth <id> | node <id> <id>)")
    blowup.set_defaults(func=_cmd_blowup)

    res = sub.add_parser("resolve", help="compute the image fiber report")
    res.add_argument("config", help="config file, or - for stdin")
    res.set_defaults(func=_cmd_resolve)

    enum = sub.add_parser("enumerate", help="enumerate fiber classes of a level")
    enum.add_argument("--level", type=int, required=True)
    enum.add_argument("--main-only", action="store_true", help="restrict to main-fiber centers")
    enum.add_argument("--cap", type=int, default=6)
    enum.add_argument("--export", default=None, help="write configs and a manifest here")
    enum.set_defaults(func=_cmd_enumerate)

    verify = sub.add_parser("verify", help="machine-check the classification")
    verify.add_argument("--max-level", type=int, default=5, dest="max_level")
    verify.add_argument("--cap", type=int, default=None)
    verify.set_defaults(func=_cmd_verify)

    models = sub.add_parser("models", help="list geometrically ruled models of a main fiber")
    models.add_argument("config", help="config file, or - for stdin")
    models.set_defaults(func=_cmd_models)

    render = sub.add_parser("render", help="render a config as a graph")
    render.add_argument("config", help="config file, or - for stdin")
    render.add_argument("--format", choices=["dot", "ascii"], default="dot")
    render.set_defaults(func=_cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TransformError, ResolutionError, ModelError,
            EnumerationCapError, OSError, ValueError) as exc:
        print(f"conicfibers: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
