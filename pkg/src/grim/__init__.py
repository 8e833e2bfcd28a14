"""Workbench for LLM-generated branching narrative graphs.

Generate storyline bundles through a provider gateway, parse and
validate them against structural constraints, build the NODES/EDGES
render payload deterministically, and iterate with designer edits.
"""

from .errors import (
    CorruptProjectError,
    Diagnostic,
    EditIdClash,
    EditRefUnknown,
    EditRejected,
    EmptyResponseError,
    FixtureMissError,
    GatewayError,
    GrimError,
    NetworkError,
    ParseFailedError,
    RateLimitedError,
    SchemaVersionError,
    Severity,
    StoreError,
    StoreIOError,
    VersionUnknownError,
    Violation,
)
from .model import (
    Beat,
    EditSet,
    GenerationSpec,
    NarrativeGraph,
    StoryBundle,
    Storyline,
    merge_transitions,
    storyline_transitions,
)
from .parsing import ParseResult, parse_storyline_document, serialize_story_bundle
from .validator import ValidationReport, longest_common_run, validate
from .render import (
    ReconcileReport,
    RenderPayload,
    build_render_payload,
    parse_render_payload,
    reconcile,
    serialize_render_payload,
)
from .prompts import (
    PromptText,
    build_edit_prompt,
    build_generation_prompt,
    build_graphify_prompt,
)
from .gateway import ProviderConfig, Transcript, complete, prompt_digest
from .editing import (
    BundleDiff,
    EditCheck,
    EditOutcome,
    EditReport,
    apply_edit,
    diff_bundles,
    relax_spec,
    verify_edit,
)
from .store import (
    Project,
    ProjectVersion,
    content_project_id,
    export_render_payload,
    load,
    project_filename,
    save,
)
from .pipeline import generate_project, generate_version, graphify_via_llm

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Beat",
    "BundleDiff",
    "CorruptProjectError",
    "Diagnostic",
    "EditCheck",
    "EditIdClash",
    "EditOutcome",
    "EditRefUnknown",
    "EditRejected",
    "EditReport",
    "EditSet",
    "EmptyResponseError",
    "FixtureMissError",
    "GatewayError",
    "GenerationSpec",
    "GrimError",
    "NarrativeGraph",
    "NetworkError",
    "ParseFailedError",
    "ParseResult",
    "Project",
    "ProjectVersion",
    "PromptText",
    "ProviderConfig",
    "RateLimitedError",
    "ReconcileReport",
    "RenderPayload",
    "SchemaVersionError",
    "Severity",
    "StoreError",
    "StoreIOError",
    "StoryBundle",
    "Storyline",
    "Transcript",
    "ValidationReport",
    "VersionUnknownError",
    "Violation",
    "apply_edit",
    "build_edit_prompt",
    "build_generation_prompt",
    "build_graphify_prompt",
    "build_render_payload",
    "complete",
    "content_project_id",
    "diff_bundles",
    "export_render_payload",
    "generate_project",
    "generate_version",
    "graphify_via_llm",
    "load",
    "longest_common_run",
    "merge_transitions",
    "parse_render_payload",
    "parse_storyline_document",
    "project_filename",
    "prompt_digest",
    "reconcile",
    "relax_spec",
    "save",
    "serialize_render_payload",
    "serialize_story_bundle",
    "storyline_transitions",
    "validate",
    "verify_edit",
]
