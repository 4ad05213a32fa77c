"""HTTP boundary: session lifecycle, chat turns, uploads, artifact serving."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .charts import StoreWriteFailed
from .llm import UpstreamError
from .orchestrator import Busy, Orchestrator, ToolRoundsExceeded, UnknownSession
from .tools import FileNotFound, ToolValidationFailed, UnknownTool

ALLOWED_UPLOAD_EXTS = frozenset(
    {".epw", ".jpeg", ".jpg", ".png", ".txt", ".json", ".pdf", ".docx"}
)
DEFAULT_MAX_UPLOAD_BYTES = 20 * 1024 * 1024


class ChatRequest(BaseModel):
    session_id: str
    text: str = ""
    file_refs: list[str] = []


def api_error(status: int, code: str, message: str) -> JSONResponse:
    """Uniform error body; code is machine-readable, message for humans."""
    return JSONResponse({"code": code, "message": message}, status_code=status)


def safe_name(raw: str) -> str:
    # drop any client-supplied directory parts, tolerating backslash paths
    return Path(raw.replace("\\", "/")).name


def create_app(
    orchestrator: Orchestrator,
    upload_root: str | Path,
    cors_origins: Sequence[str] = ("*",),
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES,
) -> FastAPI:
    app = FastAPI(title="gbqa gateway", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    upload_root = Path(upload_root)
    engine = orchestrator.engine

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/api/session")
    def new_session(request: Request) -> dict:
        # tolerant by contract: whatever the body holds, hand out a session
        return {"session_id": orchestrator.new_session().session_id}

    @app.post("/api/chat")
    def chat(body: ChatRequest):
        try:
            result = orchestrator.handle_turn(
                body.session_id, body.text, file_names=body.file_refs
            )
        except UnknownSession:
            return api_error(404, "unknown_session", f"no session {body.session_id!r}")
        except FileNotFound as err:
            return api_error(400, "file_not_found", str(err))
        except Busy:
            return api_error(409, "busy", "another turn is running on this session")
        except UpstreamError as err:
            return api_error(502, "upstream_error", str(err))
        except ToolRoundsExceeded as err:
            return api_error(502, "tool_rounds_exceeded", str(err))
        except (ToolValidationFailed, UnknownTool) as err:
            return api_error(502, "tool_protocol_error", str(err))
        except StoreWriteFailed as err:
            return api_error(500, "store_write_failed", str(err))
        artifacts = []
        for art_id in result.artifacts:
            meta = engine.artifacts.get(art_id)
            artifacts.append(
                {
                    "artifact_id": art_id,
                    "media_type": meta.media_type if meta else "application/octet-stream",
                    "url": f"/api/artifacts/{art_id}",
                }
            )
        return {"text": result.text, "artifacts": artifacts}

    @app.post("/api/upload")
    async def upload(
        session_id: str = Form(...), files: list[UploadFile] = File(...)
    ):
        try:
            session = orchestrator.sessions.get(session_id)
        except UnknownSession:
            return api_error(404, "unknown_session", f"no session {session_id!r}")

        # validate the whole batch before writing anything: one bad file
        # rejects the request and nothing is stored
        incoming: list[tuple[str, bytes]] = []
        for item in files:
            name = safe_name(item.filename or "")
            if not name or Path(name).suffix.lower() not in ALLOWED_UPLOAD_EXTS:
                allowed = ", ".join(sorted(ALLOWED_UPLOAD_EXTS))
                return api_error(
                    415,
                    "unsupported_type",
                    f"{item.filename!r} is not an accepted type ({allowed})",
                )
            data = await item.read()
            if len(data) > max_upload_bytes:
                return api_error(
                    413,
                    "too_large",
                    f"{name!r} exceeds the {max_upload_bytes} byte limit",
                )
            incoming.append((name, data))

        session_dir = (upload_root / session_id).resolve()
        session_dir.mkdir(parents=True, exist_ok=True)
        stored = []
        for name, data in incoming:
            path = (session_dir / name).resolve()
            if path.parent != session_dir:  # can't happen after safe_name; belt & braces
                return api_error(415, "unsupported_type", f"bad file name {name!r}")
            path.write_bytes(data)
            session.uploaded_files[name] = path
            stored.append(name)
        return {"stored": stored}

    @app.get("/api/artifacts/{artifact_id}")
    def get_artifact(artifact_id: str):
        if not artifact_id.isalnum():
            return api_error(404, "unknown_artifact", f"no artifact {artifact_id!r}")
        path = engine.store.path(artifact_id)
        if path is None:
            return api_error(404, "unknown_artifact", f"no artifact {artifact_id!r}")
        return Response(
            content=path.read_bytes(), media_type=engine.store.media_type(path)
        )

    return app
