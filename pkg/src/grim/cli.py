"""Command-line front door.

Exit codes: 0 success, 1 validation or parse errors present, 2 usage
error, 3 runtime failure (gateway, store, filesystem). Stdout carries
machine-readable JSON unless --human asks for plain text; error
messages go to stderr.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import store
from .editing import apply_edit, diff_bundles
from .errors import (
    EditIdClash,
    EditRefUnknown,
    EditRejected,
    GrimError,
    ParseFailedError,
)
from .gateway import ProviderConfig
from .model import Beat, EditSet, GenerationSpec
from .pipeline import generate_project, graphify_via_llm
from .render import build_render_payload, serialize_render_payload
from .validator import ValidationReport, validate

__all__ = ["build_parser", "iter_grid_cells", "main"]


class _UsageError(Exception):
    pass


def _provider_config(args) -> ProviderConfig:
    if args.mode in ("record", "replay") and not args.fixtures:
        raise _UsageError(f"--fixtures is required in {args.mode} mode")
    return ProviderConfig.from_env(mode=args.mode, fixture_dir=args.fixtures)


def _emit(args, payload: dict, human: str) -> None:
    if args.human:
        print(human)
    else:
        print(json.dumps(payload, indent=2, ensure_ascii=False))


def _fail(payload: dict) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False), file=sys.stderr)


def _human_validation(header: str, report: ValidationReport) -> str:
    lines = [header]
    for v in report.violations:
        subjects = f" {list(v.subjects)}" if v.subjects else ""
        lines.append(f"  {v.severity.value.upper():7s} {v.code}{subjects}: {v.message}")
    if not report.violations:
        lines.append("  all checks passed")
    return "\n".join(lines)


def _parse_edge(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2 or not parts[0] or not parts[1]:
        raise _UsageError(f"edge {text!r} is not of the form A:B")

    def endpoint(s: str):
        return int(s) if s.isdigit() else s

    return (endpoint(parts[0]), endpoint(parts[1]))


def _cmd_generate(args) -> int:
    spec = GenerationSpec(
        story=args.story,
        setting=args.setting,
        n_starts=args.starts,
        n_endings=args.ends,
        n_storylines=args.storylines,
    )
    config = _provider_config(args)
    project, validation = generate_project(spec, config)
    out = Path(args.output) if args.output else Path(
        store.project_filename(project.id)
    )
    store.save(project, out)
    payload = {
        "project_id": project.id,
        "path": str(out),
        "version": 1,
        "validation": validation.to_dict(),
    }
    _emit(args, payload,
          _human_validation(f"project {project.id} v1 -> {out}", validation))
    return 1 if validation.errors() else 0


def _cmd_validate(args) -> int:
    project = store.load(args.project)
    report = validate(project.current().bundle, spec=project.spec)
    _emit(args, report.to_dict(),
          _human_validation(f"{args.project} v{project.current().version}", report))
    if report.errors():
        return 1
    if args.strict and report.violations:
        return 1
    return 0


def _cmd_graph(args) -> int:
    project = store.load(args.project)
    bundle = project.current().bundle
    if args.via_llm:
        config = _provider_config(args)
        payload, report, _ = graphify_via_llm(bundle, config)
        info: dict = {"path": args.output, "reconcile": report.to_dict()}
        human = (f"payload written to {args.output} "
                 f"({'clean' if report.clean else 'repaired'})")
    else:
        payload = build_render_payload(bundle)
        info = {"path": args.output}
        human = f"payload written to {args.output}"
    Path(args.output).write_text(
        serialize_render_payload(payload), encoding="utf-8"
    )
    _emit(args, info, human)
    return 0


def _cmd_edit(args) -> int:
    project = store.load(args.project)
    old = project.current().bundle
    next_id = max(old.beat_ids(), default=0) + 1
    added = []
    for desc in args.add_node:
        added.append(Beat(next_id, desc))
        next_id += 1
    edits = EditSet(
        nodes_added=tuple(added),
        nodes_deleted=tuple(args.del_node),
        edges_added=tuple(_parse_edge(e) for e in args.add_edge),
        edges_deleted=tuple(_parse_edge(e) for e in args.del_edge),
    )
    if edits.is_empty():
        raise _UsageError(
            "edit needs at least one of --add-node/--add-edge/--del-node/--del-edge"
        )
    config = _provider_config(args)
    outcome = apply_edit(project, edits, config)
    store.save(project, args.project)
    diff = diff_bundles(old, outcome.new_bundle)
    payload = {
        "new_version": project.current().version,
        "attempts": outcome.attempts,
        "edit_report": outcome.edit_report.to_dict(),
        "validation": outcome.validation.to_dict(),
        "diff": diff.to_dict(),
    }
    human = "\n".join([
        f"accepted as v{project.current().version} "
        f"after {outcome.attempts} attempt(s)",
        f"  beats added: {sorted(diff.beats_added)}",
        f"  storylines added: {sorted(diff.storylines_added)}",
    ])
    _emit(args, payload, human)
    return 0


def _cmd_export(args) -> int:
    project = store.load(args.project)
    store.export_render_payload(project, args.version, args.output)
    payload = {"path": args.output, "version": args.version}
    _emit(args, payload, f"version {args.version} payload -> {args.output}")
    return 0


def _read_lines(path: str) -> list[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc
    out = [line.strip() for line in lines if line.strip()]
    if not out:
        raise _UsageError(f"{path} holds no entries")
    return out


def _read_constraints(path: str) -> list[tuple[int, int, int]]:
    out = []
    for line in _read_lines(path):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3 or not all(p.isdigit() for p in parts):
            raise _UsageError(
                f"constraint line {line!r} is not 'starts,endings,storylines'"
            )
        out.append((int(parts[0]), int(parts[1]), int(parts[2])))
    return out


def iter_grid_cells(stories, settings, constraints):
    """Cartesian sweep order: stories, then settings, then constraints."""
    for story, setting, (starts, ends, lines) in itertools.product(
        stories, settings, constraints
    ):
        yield GenerationSpec(story, setting, starts, ends, lines)


def _cmd_grid(args) -> int:
    stories = _read_lines(args.stories)
    settings = _read_lines(args.settings)
    constraints = _read_constraints(args.constraints)
    config = _provider_config(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    cells = list(iter_grid_cells(stories, settings, constraints))

    def run_cell(spec: GenerationSpec) -> dict:
        row = {
            "story": spec.story,
            "setting": spec.setting,
            "starts": spec.n_starts,
            "endings": spec.n_endings,
            "storylines": spec.n_storylines,
        }
        try:
            project, validation = generate_project(spec, config)
            store.save(project, outdir / store.project_filename(project.id))
        except GrimError as exc:
            row.update({"failed": exc.code, "message": exc.message})
            return row
        row.update({
            "project_id": project.id,
            "errors": len(validation.errors()),
            "warnings": len(validation.warnings()),
            "stats": validation.stats,
        })
        return row

    if args.parallel > 1:
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(spec) for spec in cells]

    summary = {"cells": len(rows), "results": rows}
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    human_rows = [f"{len(rows)} cells -> {outdir}"]
    for r in rows:
        tag = (f"FAILED {r['failed']}" if "failed" in r
               else f"{r['errors']} errors, {r['warnings']} warnings")
        human_rows.append(
            f"  {r['story']} / {r['setting']} "
            f"{r['starts']}/{r['endings']}/{r['storylines']}: {tag}"
        )
    _emit(args, summary, "\n".join(human_rows))
    bad = any("failed" in r or r.get("errors") for r in rows)
    return 1 if bad else 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    config = _provider_config(args)
    app = create_app(
        projects_dir=Path(args.projects),
        config=config,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grim",
        description="Generate, validate, visualize, and edit branching "
                    "narrative graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    output_flags = argparse.ArgumentParser(add_help=False)
    output_flags.add_argument(
        "--human", action="store_true",
        help="plain-text output instead of JSON",
    )

    gateway_flags = argparse.ArgumentParser(add_help=False)
    gateway_flags.add_argument(
        "--mode", choices=("live", "record", "replay"), default="replay",
        help="provider mode (default: replay)",
    )
    gateway_flags.add_argument(
        "--fixtures", help="transcript fixture directory (record/replay)",
    )

    p = sub.add_parser("generate", parents=[output_flags, gateway_flags],
                       help="run the full generation pipeline")
    p.add_argument("--story", required=True)
    p.add_argument("--setting", required=True)
    p.add_argument("--starts", type=int, required=True)
    p.add_argument("--ends", type=int, required=True)
    p.add_argument("--storylines", type=int, required=True)
    p.add_argument("-o", "--output", help="project file (default <id>.grim.json)")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("validate", parents=[output_flags],
                       help="check a project's current version")
    p.add_argument("project")
    p.add_argument("--strict", action="store_true",
                   help="warnings also fail the exit code")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("graph", parents=[output_flags, gateway_flags],
                       help="write the render payload for the current version")
    p.add_argument("project")
    p.add_argument("--via-llm", action="store_true",
                   help="ask the model for the payload, then reconcile "
                        "and repair it")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("edit", parents=[output_flags, gateway_flags],
                       help="apply a designer edit through the model")
    p.add_argument("project")
    p.add_argument("--add-node", action="append", default=[],
                   metavar="DESCRIPTION")
    p.add_argument("--add-edge", action="append", default=[], metavar="A:B")
    p.add_argument("--del-node", action="append", default=[], type=int,
                   metavar="N")
    p.add_argument("--del-edge", action="append", default=[], metavar="A:B")
    p.set_defaults(func=_cmd_edit)

    p = sub.add_parser("export", parents=[output_flags],
                       help="export one version's render payload")
    p.add_argument("project")
    p.add_argument("--version", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("grid", parents=[output_flags, gateway_flags],
                       help="cartesian story/setting/constraint sweep")
    p.add_argument("--stories", required=True)
    p.add_argument("--settings", required=True)
    p.add_argument("--constraints", required=True,
                   help="file of 'starts,endings,storylines' lines")
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("serve", parents=[gateway_flags],
                       help="start the HTTP API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", help="directory of built UI files to serve")
    p.add_argument("--projects", default="projects",
                   help="project storage directory")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EditIdClash, EditRefUnknown) as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 2
    except ParseFailedError as exc:
        _fail({
            **exc.to_dict(),
            "diagnostics": [d.to_dict() for d in exc.diagnostics],
        })
        return 1
    except EditRejected as exc:
        _fail({**exc.to_dict(), "attempts": exc.attempts, "reports": exc.reports})
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GrimError as exc:
        _fail(exc.to_dict())
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
