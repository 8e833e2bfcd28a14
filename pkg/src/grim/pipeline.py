"""End-to-end flows shared by the CLI and the HTTP server."""

from __future__ import annotations

from .errors import ParseFailedError
from .gateway import ProviderConfig, Transcript, complete
from .model import GenerationSpec, StoryBundle
from .parsing import parse_storyline_document, serialize_story_bundle
from .prompts import build_generation_prompt, build_graphify_prompt
from .render import (
    ReconcileReport,
    RenderPayload,
    parse_render_payload,
    reconcile,
)
from .store import Project, ProjectVersion, content_project_id
from .validator import ValidationReport, validate

__all__ = ["generate_version", "generate_project", "graphify_via_llm"]


def generate_version(project: Project, config: ProviderConfig
                     ) -> tuple[ProjectVersion, ValidationReport]:
    """One generation pass appended to an existing project: prompt,
    complete, parse, validate, build the payload.

    Parse errors abort with ParseFailedError; constraint violations do
    not (the report is returned for the caller to judge).
    """
    prompt = build_generation_prompt(project.spec)
    text, transcript = complete(prompt, config)
    result = parse_storyline_document(text, spec=project.spec)
    if result.bundle is None:
        raise ParseFailedError(
            "the generated storyline document did not parse",
            diagnostics=result.errors(),
        )
    validation = validate(result.bundle, spec=project.spec)
    entry = project.add_version(
        result.bundle,
        provenance={"kind": "generated"},
        transcripts=[transcript],
    )
    return entry, validation


def generate_project(spec: GenerationSpec, config: ProviderConfig,
                     project_id: str | None = None
                     ) -> tuple[Project, ValidationReport]:
    """Full pipeline into a fresh single-version project."""
    project = Project(
        id=project_id if project_id else content_project_id(spec),
        spec=spec,
    )
    _, validation = generate_version(project, config)
    return project, validation


def graphify_via_llm(bundle: StoryBundle, config: ProviderConfig
                     ) -> tuple[RenderPayload, ReconcileReport, Transcript]:
    """Ask the model for the NODES/EDGES objects, then reconcile and
    repair them against the deterministic oracle."""
    text = bundle.raw_text or serialize_story_bundle(bundle)
    prompt = build_graphify_prompt(text)
    response, transcript = complete(prompt, config)
    candidate, _warnings = parse_render_payload(response)
    report, repaired = reconcile(candidate, bundle)
    return repaired, report, transcript
