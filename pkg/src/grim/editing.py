"""The regeneration loop for designer edits.

A designer's EditSet goes out as a prompt; the model answers with a full
updated storyline document. We parse it, check the edit post-conditions
(E1..E5) and the structural constraints, and either accept the new
version or re-prompt with the failures spelled out, up to a bounded
number of attempts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import EditRejected, Severity, Violation
from .gateway import ProviderConfig, Transcript, complete
from .model import (
    Beat,
    EditSet,
    GenerationSpec,
    StoryBundle,
    Storyline,
    merge_transitions,
    node_sort_key,
    normalize_description,
    storyline_transitions,
)
from .parsing import parse_storyline_document, serialize_story_bundle
from .prompts import PromptText, build_edit_prompt
from .store import Project
from .validator import ValidationReport, validate

__all__ = [
    "MAX_ATTEMPTS",
    "EditCheck",
    "EditReport",
    "EditOutcome",
    "BundleDiff",
    "verify_edit",
    "diff_bundles",
    "relax_spec",
    "summarize_failures",
    "build_retry_prompt",
    "apply_edit",
]

MAX_ATTEMPTS = 3

_ERROR_CHECKS = ("E1", "E2", "E3", "E4")


@dataclass(frozen=True)
class EditCheck:
    check_id: str
    passed: bool
    severity: Severity
    message: str
    subjects: tuple = ()

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "passed": self.passed,
            "severity": self.severity.value,
            "subjects": list(self.subjects),
            "message": self.message,
        }


@dataclass(frozen=True)
class EditReport:
    checks: tuple[EditCheck, ...]

    @property
    def ok(self) -> bool:
        return not self.failures()

    def failures(self) -> list[EditCheck]:
        return [
            c for c in self.checks
            if not c.passed and c.severity is Severity.ERROR
        ]

    def warnings(self) -> list[EditCheck]:
        return [
            c for c in self.checks
            if not c.passed and c.severity is Severity.WARNING
        ]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


def _transition_set(bundle: StoryBundle) -> set:
    out: set = set()
    for line in bundle.storylines:
        out.update(storyline_transitions(line))
    return out


def _edge_text(edge) -> str:
    def one(endpoint):
        return f"Beat {endpoint}" if isinstance(endpoint, int) else str(endpoint)

    return f"{one(edge[0])} -> {one(edge[1])}"


def verify_edit(old: StoryBundle, new: StoryBundle, edits: EditSet) -> EditReport:
    """Check the post-conditions of one edit against a regenerated bundle."""
    checks: list[EditCheck] = []
    new_map = new.beat_map()
    new_by_desc = {
        normalize_description(b.description): b.id for b in new.beats
    }

    missing_added: list[int] = []
    for want in edits.nodes_added:
        norm = normalize_description(want.description)
        by_id = new_map.get(want.id)
        if by_id is not None and normalize_description(by_id.description) == norm:
            continue
        if norm in new_by_desc:
            continue
        missing_added.append(want.id)
    checks.append(EditCheck(
        "E1",
        not missing_added,
        Severity.ERROR,
        "every added beat appears in the regenerated storylines"
        if not missing_added else
        f"added beats missing from the regenerated storylines: "
        f"{', '.join(str(i) for i in missing_added)}",
        tuple(missing_added),
    ))

    used_ids = {bid for line in new.storylines for bid in line.beat_ids}
    lingering = sorted(set(edits.nodes_deleted) & used_ids)
    checks.append(EditCheck(
        "E2",
        not lingering,
        Severity.ERROR,
        "no deleted beat appears in any storyline"
        if not lingering else
        f"deleted beats still routed through: "
        f"{', '.join(str(i) for i in lingering)}",
        tuple(lingering),
    ))

    transitions = _transition_set(new)
    missing_edges = [e for e in edits.edges_added if tuple(e) not in transitions]
    checks.append(EditCheck(
        "E3",
        not missing_edges,
        Severity.ERROR,
        "every added edge appears as an adjacent transition"
        if not missing_edges else
        f"added edges absent from all storylines: "
        f"{'; '.join(_edge_text(e) for e in missing_edges)}",
        tuple(tuple(e) for e in missing_edges),
    ))

    lingering_edges = [e for e in edits.edges_deleted if tuple(e) in transitions]
    checks.append(EditCheck(
        "E4",
        not lingering_edges,
        Severity.ERROR,
        "no deleted edge appears as a transition"
        if not lingering_edges else
        f"deleted transitions still present: "
        f"{'; '.join(_edge_text(e) for e in lingering_edges)}",
        tuple(tuple(e) for e in lingering_edges),
    ))

    touched = set(edits.nodes_deleted) | {b.id for b in edits.nodes_added}
    drifted = sorted(
        bid
        for bid, beat in old.beat_map().items()
        if bid not in touched and bid in new_map
        and normalize_description(beat.description)
        != normalize_description(new_map[bid].description)
    )
    checks.append(EditCheck(
        "E5",
        not drifted,
        Severity.WARNING,
        "untouched beats keep their descriptions"
        if not drifted else
        f"untouched beats were reworded: {', '.join(str(i) for i in drifted)}",
        tuple(drifted),
    ))
    return EditReport(tuple(checks))


@dataclass(frozen=True)
class BundleDiff:
    beats_added: frozenset = frozenset()
    beats_removed: frozenset = frozenset()
    storylines_added: frozenset = frozenset()
    storylines_removed: frozenset = frozenset()
    storylines_changed: frozenset = frozenset()
    edges_added: frozenset = frozenset()
    edges_removed: frozenset = frozenset()

    def is_empty(self) -> bool:
        return not (
            self.beats_added or self.beats_removed or self.storylines_added
            or self.storylines_removed or self.storylines_changed
            or self.edges_added or self.edges_removed
        )

    def to_dict(self) -> dict:
        def edge_list(edges):
            return [
                list(e)
                for e in sorted(
                    edges, key=lambda e: (node_sort_key(e[0]), node_sort_key(e[1]))
                )
            ]

        return {
            "beats_added": sorted(self.beats_added),
            "beats_removed": sorted(self.beats_removed),
            "storylines_added": sorted(self.storylines_added),
            "storylines_removed": sorted(self.storylines_removed),
            "storylines_changed": sorted(self.storylines_changed),
            "edges_added": edge_list(self.edges_added),
            "edges_removed": edge_list(self.edges_removed),
        }


def _sequence_key(line: Storyline) -> tuple:
    return (line.start_label, line.beat_ids, line.end_label)


def diff_bundles(old: StoryBundle, new: StoryBundle) -> BundleDiff:
    old_lines = {s.index: _sequence_key(s) for s in old.storylines}
    new_lines = {s.index: _sequence_key(s) for s in new.storylines}
    shared = set(old_lines) & set(new_lines)
    old_edges = merge_transitions(old).edges
    new_edges = merge_transitions(new).edges
    return BundleDiff(
        beats_added=frozenset(new.beat_ids() - old.beat_ids()),
        beats_removed=frozenset(old.beat_ids() - new.beat_ids()),
        storylines_added=frozenset(set(new_lines) - set(old_lines)),
        storylines_removed=frozenset(set(old_lines) - set(new_lines)),
        storylines_changed=frozenset(
            i for i in shared if old_lines[i] != new_lines[i]
        ),
        edges_added=frozenset(new_edges - old_edges),
        edges_removed=frozenset(old_edges - new_edges),
    )


def relax_spec(original: GenerationSpec, observed: StoryBundle) -> GenerationSpec:
    """Constraint counts after an edit: the original targets, raised to
    whatever the accepted bundle actually grew to (edits may add endings
    or storylines, never silently shrink the requirement)."""
    return GenerationSpec(
        story=original.story,
        setting=original.setting,
        n_starts=max(original.n_starts, len(observed.starts)),
        n_endings=max(original.n_endings, len(observed.ends)),
        n_storylines=max(original.n_storylines, len(observed.storylines)),
    )


def summarize_failures(edit_checks=(), violations=(), diagnostics=()) -> str:
    """Stable, numbered failure summary used in retry prompts."""
    lines: list[str] = []
    for diag in diagnostics:
        place = f" (line {diag.line})" if diag.line else ""
        lines.append(f"parse error {diag.code}{place}: {diag.message}")
    for check in edit_checks:
        lines.append(f"edit check {check.check_id} failed: {check.message}")
    for violation in violations:
        lines.append(f"constraint {violation.code} violated: {violation.message}")
    return "\n".join(
        f"{n}. {text}" for n, text in enumerate(lines, start=1)
    )


def build_retry_prompt(prev: PromptText, failures_text: str) -> PromptText:
    text = (
        prev.text
        + "\n\nYour previous answer was rejected for these reasons:\n"
        + failures_text
        + "\nRegenerate the complete document and correct every one of "
        "these problems."
    )
    blob = json.dumps(
        {"kind": "edit-retry", "prev": prev.input_digest, "failures": failures_text},
        sort_keys=True,
        ensure_ascii=False,
    )
    digest = hashlib.sha256(blob.encode("utf-8")).hexdigest()
    return PromptText(prev.kind, text, digest, prev.template_version)


@dataclass
class EditOutcome:
    new_bundle: StoryBundle
    edit_report: EditReport
    validation: ValidationReport
    attempts: int
    transcripts: list[Transcript] = field(default_factory=list)


def _renumber_to_requested(new: StoryBundle, edits: EditSet) -> StoryBundle:
    """When the model kept an added beat's text but renumbered it, map it
    back to the requested id (only where that id is still free)."""
    by_desc: dict[str, int] = {}
    for beat in new.beats:
        by_desc.setdefault(normalize_description(beat.description), beat.id)
    used = set(new.beat_ids())
    mapping: dict[int, int] = {}
    for want in edits.nodes_added:
        got = by_desc.get(normalize_description(want.description))
        if got is None or got == want.id or want.id in used:
            continue
        mapping[got] = want.id
        used.discard(got)
        used.add(want.id)
    if not mapping:
        return new

    def remap(bid: int) -> int:
        return mapping.get(bid, bid)

    renumbered = StoryBundle(
        spec=new.spec,
        beats=tuple(sorted(
            (Beat(remap(b.id), b.description) for b in new.beats),
            key=lambda b: b.id,
        )),
        storylines=tuple(
            Storyline(
                index=s.index,
                start_label=s.start_label,
                beat_ids=tuple(remap(b) for b in s.beat_ids),
                end_label=s.end_label,
            )
            for s in new.storylines
        ),
        starts={label: remap(bid) for label, bid in new.starts.items()},
        ends={label: remap(bid) for label, bid in new.ends.items()},
        declared_common_beats=tuple(
            sorted(remap(b) for b in new.declared_common_beats)
        ),
    )
    return renumbered.with_raw_text(serialize_story_bundle(renumbered))


def apply_edit(project: Project, edits: EditSet, config: ProviderConfig,
               max_attempts: int = MAX_ATTEMPTS) -> EditOutcome:
    """Run the regeneration loop and append the accepted bundle as a new
    project version. Raises EditRejected when the attempt budget runs out."""
    if edits.is_empty():
        raise ValueError("refusing to apply an empty edit set")
    old = project.current().bundle
    prompt = build_edit_prompt(old, edits)

    transcripts: list[Transcript] = []
    attempt_reports: list[dict] = []
    for attempt in range(1, max_attempts + 1):
        text, transcript = complete(prompt, config)
        transcripts.append(transcript)

        result = parse_storyline_document(text, spec=project.spec)
        if result.bundle is None:
            failures = summarize_failures(diagnostics=result.errors())
            attempt_reports.append({
                "attempt": attempt,
                "stage": "parse",
                "problems": [d.to_dict() for d in result.errors()],
            })
            prompt = build_retry_prompt(prompt, failures)
            continue

        # models sometimes keep an added beat's text but assign their own
        # number; map those back to the requested ids before judging
        candidate = _renumber_to_requested(result.bundle, edits)
        report = verify_edit(old, candidate, edits)

        validation = validate(candidate, spec=relax_spec(project.spec, candidate))
        failed_checks = report.failures()
        violations = validation.errors()
        if not failed_checks and not violations:
            project.add_version(
                candidate,
                provenance={"kind": "edited", "edits": edits.to_dict()},
                transcripts=transcripts,
            )
            return EditOutcome(
                new_bundle=candidate,
                edit_report=report,
                validation=validation,
                attempts=attempt,
                transcripts=transcripts,
            )
        attempt_reports.append({
            "attempt": attempt,
            "stage": "verify",
            "problems": [c.to_dict() for c in failed_checks]
            + [v.to_dict() for v in violations],
        })
        prompt = build_retry_prompt(
            prompt, summarize_failures(failed_checks, violations)
        )

    raise EditRejected(
        f"edit not accepted after {max_attempts} attempts",
        attempts=max_attempts,
        reports=attempt_reports,
    )
