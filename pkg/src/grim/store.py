"""Versioned project persistence: one JSON document per project.

Each version stores the raw storyline text (hash-guarded), its
provenance, the transcripts that produced it, and the render payload.
Bundles are re-parsed from the raw text on load, so parser fixes apply
retroactively to saved projects.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    CorruptProjectError,
    SchemaVersionError,
    StoreIOError,
    VersionUnknownError,
)
from .gateway import Transcript
from .model import GenerationSpec, StoryBundle
from .parsing import parse_storyline_document, serialize_story_bundle
from .render import RenderPayload, build_render_payload, serialize_render_payload

__all__ = [
    "SCHEMA_VERSION",
    "Project",
    "ProjectVersion",
    "content_project_id",
    "project_filename",
    "save",
    "load",
    "export_render_payload",
]

SCHEMA_VERSION = 1

_TOP_LEVEL_FIELDS = {
    "schema_version",
    "id",
    "spec",
    "created_at",
    "updated_at",
    "versions",
}


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def content_project_id(spec: GenerationSpec) -> str:
    """Stable 12-hex id derived from the generation inputs."""
    blob = json.dumps(spec.to_dict(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def project_filename(project_id: str) -> str:
    return f"{project_id}.grim.json"


@dataclass
class ProjectVersion:
    version: int
    bundle: StoryBundle
    payload: RenderPayload
    provenance: dict
    transcripts: list[Transcript] = field(default_factory=list)

    def to_dict(self) -> dict:
        raw = self.bundle.raw_text
        return {
            "version": self.version,
            "raw_text": raw,
            "raw_text_sha256": hashlib.sha256(raw.encode("utf-8")).hexdigest(),
            "provenance": self.provenance,
            "transcripts": [t.to_dict() for t in self.transcripts],
            "payload": self.payload.to_document(),
        }


@dataclass
class Project:
    id: str
    spec: GenerationSpec
    versions: list[ProjectVersion] = field(default_factory=list)
    created_at: str = field(default_factory=_utcnow)
    updated_at: str = field(default_factory=_utcnow)

    def version(self, number: int) -> ProjectVersion:
        for v in self.versions:
            if v.version == number:
                return v
        raise VersionUnknownError(
            f"project {self.id} has no version {number} "
            f"(have 1..{len(self.versions)})"
        )

    def current(self) -> ProjectVersion:
        if not self.versions:
            raise VersionUnknownError(f"project {self.id} has no versions yet")
        return self.versions[-1]

    def add_version(self, bundle: StoryBundle, provenance: dict,
                    transcripts: list[Transcript],
                    payload: RenderPayload | None = None) -> ProjectVersion:
        """Append the next version; timestamps follow the transcripts so
        replayed runs serialize identically."""
        if not bundle.raw_text:
            # hand-built bundles carry no source text; store one that parses
            bundle = bundle.with_raw_text(serialize_story_bundle(bundle))
        entry = ProjectVersion(
            version=len(self.versions) + 1,
            bundle=bundle,
            payload=payload if payload is not None else build_render_payload(bundle),
            provenance=provenance,
            transcripts=list(transcripts),
        )
        self.versions.append(entry)
        stamp = transcripts[0].timestamp if transcripts else _utcnow()
        if len(self.versions) == 1:
            self.created_at = stamp
        self.updated_at = stamp
        return entry

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "spec": self.spec.to_dict(),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "versions": [v.to_dict() for v in self.versions],
        }


@contextmanager
def _file_lock(path: Path):
    lock_path = Path(str(path) + ".lock")
    try:
        handle = open(lock_path, "w")
    except OSError as exc:
        raise StoreIOError(f"cannot open lock file {lock_path}: {exc}") from exc
    try:
        fcntl.flock(handle, fcntl.LOCK_EX)
        yield
    finally:
        fcntl.flock(handle, fcntl.LOCK_UN)
        handle.close()


def save(project: Project, path) -> None:
    path = Path(path)
    doc = json.dumps(project.to_dict(), indent=2, ensure_ascii=False) + "\n"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with _file_lock(path):
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(doc, encoding="utf-8")
            os.replace(tmp, path)
    except OSError as exc:
        raise StoreIOError(f"cannot write project file {path}: {exc}") from exc


def _version_from_dict(d: dict, spec: GenerationSpec, project_id: str,
                       number: int) -> ProjectVersion:
    raw = str(d.get("raw_text", ""))
    recorded = d.get("raw_text_sha256", "")
    actual = hashlib.sha256(raw.encode("utf-8")).hexdigest()
    if recorded != actual:
        raise CorruptProjectError(
            f"project {project_id} version {number}: raw_text hash mismatch"
        )
    result = parse_storyline_document(raw, spec=spec)
    if result.bundle is None:
        codes = ", ".join(diag.code for diag in result.errors())
        raise CorruptProjectError(
            f"project {project_id} version {number}: stored text no longer "
            f"parses ({codes})"
        )
    return ProjectVersion(
        version=number,
        bundle=result.bundle,
        payload=RenderPayload.from_document(d["payload"]),
        provenance=dict(d.get("provenance", {})),
        transcripts=[Transcript.from_dict(t) for t in d.get("transcripts", [])],
    )


def load(path) -> Project:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreIOError(f"cannot read project file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptProjectError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptProjectError(f"{path} does not hold a project object")

    schema = doc.get("schema_version")
    if schema != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path} has schema_version {schema!r}; this build reads "
            f"{SCHEMA_VERSION}"
        )
    unknown = set(doc) - _TOP_LEVEL_FIELDS
    if unknown:
        raise SchemaVersionError(
            f"{path} carries unrecognized fields {sorted(unknown)}; likely "
            f"written by a newer build"
        )

    try:
        spec = GenerationSpec.from_dict(doc["spec"])
        project = Project(
            id=str(doc["id"]),
            spec=spec,
            created_at=str(doc.get("created_at", "")),
            updated_at=str(doc.get("updated_at", "")),
        )
        for i, entry in enumerate(doc.get("versions", []), start=1):
            number = int(entry.get("version", 0))
            if number != i:
                raise CorruptProjectError(
                    f"project {project.id}: version numbers not contiguous "
                    f"(position {i} holds {number})"
                )
            project.versions.append(
                _version_from_dict(entry, spec, project.id, number)
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptProjectError(f"{path} is missing required fields: {exc}") from exc
    return project


def export_render_payload(project: Project, version: int, path) -> None:
    entry = project.version(version)
    try:
        Path(path).write_text(
            serialize_render_payload(entry.payload), encoding="utf-8"
        )
    except OSError as exc:
        raise StoreIOError(f"cannot write payload file {path}: {exc}") from exc
