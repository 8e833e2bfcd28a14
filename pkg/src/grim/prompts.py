"""Renders the three pipeline prompts from versioned template assets.

Templates live next to the package as ``templates/*.tmpl``; the leading
``#`` header block carries the version id and is stripped before
substitution, so rendered prompt text never contains it.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from string import Template

from .errors import EditIdClash, EditRefUnknown
from .model import EditSet, GenerationSpec, StoryBundle
from .parsing import serialize_story_bundle

__all__ = [
    "PromptText",
    "build_generation_prompt",
    "build_graphify_prompt",
    "build_edit_prompt",
    "template_version",
]

_cache: dict[str, tuple[str, Template]] = {}

_POINTER_LABEL = re.compile(r"^(START|END)_\d+$")


def _load(name: str) -> tuple[str, Template]:
    if name not in _cache:
        raw = resources.files("grim").joinpath("templates", name).read_text(
            encoding="utf-8"
        )
        lines = raw.splitlines()
        version = ""
        i = 0
        while i < len(lines) and lines[i].startswith("#"):
            header = lines[i][1:].strip()
            if not version and header.startswith("version:"):
                version = header.split(":", 1)[1].strip()
            i += 1
        _cache[name] = (version, Template("\n".join(lines[i:])))
    return _cache[name]


def template_version(kind: str) -> str:
    version, _ = _load(f"{kind}.tmpl")
    return version


def _digest(kind: str, payload: dict) -> str:
    blob = json.dumps({"kind": kind, **payload}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptText:
    kind: str
    text: str
    input_digest: str
    template_version: str


def build_generation_prompt(spec: GenerationSpec) -> PromptText:
    version, tmpl = _load("generate.tmpl")
    text = tmpl.substitute(
        story=spec.story,
        setting=spec.setting,
        n_starts=spec.n_starts,
        n_endings=spec.n_endings,
        n_storylines=spec.n_storylines,
    )
    return PromptText("generate", text, _digest("generate", spec.to_dict()), version)


def build_graphify_prompt(bundle_text: str) -> PromptText:
    if not bundle_text.strip():
        raise ValueError("graphify prompt needs a non-empty draft")
    version, tmpl = _load("graphify.tmpl")
    draft = bundle_text.strip("\n")
    text = tmpl.substitute(draft=draft)
    return PromptText("graphify", text, _digest("graphify", {"draft": draft}), version)


def _endpoint_text(endpoint) -> str:
    return f"Beat {endpoint}" if isinstance(endpoint, int) else str(endpoint)


def _check_endpoint(endpoint, known_beats: set[int], context: str) -> None:
    if isinstance(endpoint, int):
        if endpoint not in known_beats:
            raise EditRefUnknown(f"{context} references unknown beat {endpoint}")
    elif not _POINTER_LABEL.match(str(endpoint)):
        raise EditRefUnknown(f"{context} endpoint {endpoint!r} is not a beat id "
                             f"or a START_/END_ label")


def build_edit_prompt(bundle: StoryBundle, edits: EditSet) -> PromptText:
    """Render the regeneration prompt for one designer edit.

    Added beats must carry fresh ids (continue past the bundle's max id);
    every beat id an edge or deletion cites must resolve.
    """
    if edits.is_empty():
        raise ValueError("edit prompt needs a non-empty edit set")

    existing = bundle.beat_ids()
    added_ids: set[int] = set()
    for beat in edits.nodes_added:
        if beat.id in existing or beat.id in added_ids:
            raise EditIdClash(f"added beat id {beat.id} is already in use")
        added_ids.add(beat.id)
    for bid in edits.nodes_deleted:
        if bid not in existing:
            raise EditRefUnknown(f"cannot delete unknown beat {bid}")
    known = existing | added_ids
    for src, dst in edits.edges_added:
        _check_endpoint(src, known, "added edge")
        _check_endpoint(dst, known, "added edge")
    for src, dst in edits.edges_deleted:
        _check_endpoint(src, existing, "deleted edge")
        _check_endpoint(dst, existing, "deleted edge")

    def block(lines: list[str]) -> str:
        return "\n".join(lines) if lines else "(none)"

    original = (bundle.raw_text or serialize_story_bundle(bundle)).strip("\n")
    version, tmpl = _load("edit.tmpl")
    text = tmpl.substitute(
        original=original,
        added_beats=block(
            [f"Beat {b.id}: {b.description}" for b in edits.nodes_added]
        ),
        deleted_beats=block([f"Beat {bid}" for bid in edits.nodes_deleted]),
        added_edges=block(
            [f"{_endpoint_text(a)} -> {_endpoint_text(b)}"
             for a, b in edits.edges_added]
        ),
        deleted_edges=block(
            [f"{_endpoint_text(a)} -> {_endpoint_text(b)}"
             for a, b in edits.edges_deleted]
        ),
    )
    digest = _digest("edit", {"original": original, "edits": edits.to_dict()})
    return PromptText("edit", text, digest, version)
