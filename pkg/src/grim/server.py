"""HTTP API backing the browser client.

Every mutation of a project (generation, edits) is serialized by an
in-process lock keyed on project id; concurrent mutations answer 409
instead of queueing. Error bodies are always {code, message, details}.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import Body, FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import store
from .editing import apply_edit, diff_bundles
from .errors import (
    EditIdClash,
    EditRefUnknown,
    EditRejected,
    GatewayError,
    GrimError,
    ParseFailedError,
    VersionUnknownError,
)
from .gateway import ProviderConfig
from .model import EditSet, GenerationSpec
from .pipeline import generate_version
from .render import serialize_render_payload

__all__ = ["ApiError", "ProjectRegistry", "create_app"]


class ApiError(Exception):
    """Failure with an HTTP status and a machine-readable code."""

    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details

    def body(self) -> dict:
        return {"code": self.code, "message": self.message,
                "details": self.details}


class ProjectRegistry:
    """Projects on disk plus their per-project mutation locks."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._projects: dict[str, store.Project] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._mutex = threading.Lock()

    def path(self, project_id: str) -> Path:
        return self.directory / store.project_filename(project_id)

    def create(self, spec: GenerationSpec) -> store.Project:
        project = store.Project(id=uuid.uuid4().hex[:12], spec=spec)
        with self._mutex:
            self._projects[project.id] = project
            self._locks[project.id] = threading.Lock()
        store.save(project, self.path(project.id))
        return project

    def get(self, project_id: str) -> store.Project:
        with self._mutex:
            if project_id in self._projects:
                return self._projects[project_id]
        path = self.path(project_id)
        if not path.is_file():
            raise ApiError(404, "PROJECT-UNKNOWN", f"no project {project_id}")
        project = store.load(path)
        with self._mutex:
            self._projects.setdefault(project_id, project)
            self._locks.setdefault(project_id, threading.Lock())
            return self._projects[project_id]

    def lock(self, project_id: str) -> threading.Lock:
        with self._mutex:
            return self._locks.setdefault(project_id, threading.Lock())

    def persist(self, project: store.Project) -> None:
        store.save(project, self.path(project.id))


def create_app(projects_dir, config: ProviderConfig,
               static_dir=None) -> FastAPI:
    app = FastAPI(title="grim", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry = ProjectRegistry(projects_dir)
    app.state.registry = registry

    @app.exception_handler(ApiError)
    def _api_error(_request, exc: ApiError):
        return JSONResponse(exc.body(), status_code=exc.status)

    @app.exception_handler(VersionUnknownError)
    def _version_unknown(_request, exc: VersionUnknownError):
        return JSONResponse(
            {"code": exc.code, "message": exc.message, "details": None},
            status_code=404,
        )

    @app.exception_handler(GrimError)
    def _grim_error(_request, exc: GrimError):
        status = 502 if isinstance(exc, GatewayError) else 500
        return JSONResponse(
            {"code": exc.code, "message": exc.message, "details": None},
            status_code=status,
        )

    def _entry(project_id: str, number: int) -> store.ProjectVersion:
        return registry.get(project_id).version(number)

    def _acquire(project_id: str) -> threading.Lock:
        lock = registry.lock(project_id)
        if not lock.acquire(blocking=False):
            raise ApiError(
                409, "BUSY",
                f"another generation or edit is in flight for {project_id}",
            )
        return lock

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/projects", status_code=201)
    def create_project(body: dict = Body(...)):
        try:
            spec = GenerationSpec.from_dict(body)
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, "BAD-SPEC", f"invalid generation spec: {exc}")
        project = registry.create(spec)
        return {"project_id": project.id}

    @app.post("/projects/{project_id}/generate")
    def generate(project_id: str):
        project = registry.get(project_id)
        lock = _acquire(project_id)
        try:
            try:
                entry, validation = generate_version(project, config)
            except ParseFailedError as exc:
                raise ApiError(
                    422, exc.code, exc.message,
                    details=[d.to_dict() for d in exc.diagnostics],
                )
            registry.persist(project)
            return {"version": entry.version, "validation": validation.to_dict()}
        finally:
            lock.release()

    @app.get("/projects/{project_id}/versions")
    def versions(project_id: str):
        project = registry.get(project_id)
        return {
            "project_id": project.id,
            "spec": project.spec.to_dict(),
            "versions": [
                {
                    "version": v.version,
                    "provenance": v.provenance,
                    "beats": len(v.bundle.beats),
                    "storylines": len(v.bundle.storylines),
                }
                for v in project.versions
            ],
        }

    @app.get("/projects/{project_id}/versions/{number}/graph")
    def graph(project_id: str, number: int):
        entry = _entry(project_id, number)
        return Response(
            serialize_render_payload(entry.payload),
            media_type="application/json",
        )

    @app.get("/projects/{project_id}/versions/{number}/storylines")
    def storylines(project_id: str, number: int):
        bundle = _entry(project_id, number).bundle
        return {
            "spec": bundle.spec.to_dict(),
            "beats": [
                {"id": b.id, "description": b.description} for b in bundle.beats
            ],
            "storylines": [
                {
                    "index": s.index,
                    "start": s.start_label,
                    "beats": list(s.beat_ids),
                    "end": s.end_label,
                }
                for s in bundle.storylines
            ],
            "starts": bundle.starts,
            "ends": bundle.ends,
            "declared_common_beats": list(bundle.declared_common_beats),
        }

    @app.post("/projects/{project_id}/edits")
    def edits(project_id: str, body: dict = Body(...)):
        project = registry.get(project_id)
        try:
            edit_set = EditSet.from_dict(body)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ApiError(400, "BAD-EDITSET", f"invalid edit set: {exc}")
        lock = _acquire(project_id)
        try:
            old = project.current().bundle
            try:
                outcome = apply_edit(project, edit_set, config)
            except (EditRefUnknown, EditIdClash) as exc:
                raise ApiError(422, exc.code, exc.message)
            except ValueError as exc:
                raise ApiError(422, "EDIT-EMPTY", str(exc))
            except EditRejected as exc:
                raise ApiError(422, exc.code, exc.message, details=exc.reports)
            registry.persist(project)
            return {
                "new_version": project.current().version,
                "attempts": outcome.attempts,
                "edit_report": outcome.edit_report.to_dict(),
                "validation": outcome.validation.to_dict(),
                "diff": diff_bundles(old, outcome.new_bundle).to_dict(),
            }
        finally:
            lock.release()

    if static_dir:
        app.mount(
            "/", StaticFiles(directory=str(static_dir), html=True), name="ui"
        )
    return app
