"""JSON HTTP API over the shared analysis core.

Sessions are in-memory and expire after a TTL; each holds one uploaded
table and, once bound, one validated mapping. Analysis endpoints delegate
to :func:`msmkit.analyses.run_analysis`, so responses match the CLI byte
for byte. Error bodies always carry {error, message, detail}.

Configuration via environment variables: MSMKIT_UPLOAD_LIMIT (bytes),
MSMKIT_SESSION_TTL (seconds), MSMKIT_TIMEOUT (seconds), and for the
runner script MSMKIT_HOST / MSMKIT_PORT.
"""
from __future__ import annotations

import concurrent.futures
import os
import secrets
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__, analyses
from .dataio import Dataset, parse_csv
from .errors import (
    ComputationError,
    IncompatibleMapping,
    MsmkitError,
    ValidationError,
)

DEFAULT_UPLOAD_LIMIT = 32 * 1024 * 1024
DEFAULT_SESSION_TTL = 2 * 60 * 60
DEFAULT_TIMEOUT = 120.0

# endpoint path suffix -> analysis name in the shared core
ENDPOINTS = {
    "km": "km",
    "ranktest": "ranktest",
    "cox": "cox",
    "phtest": "phtest",
    "anova": "anova",
    "aft": "aft",
    "counts": "counts",
    "msmreg": "msmreg",
    "transprob": "transprob",
    "cif": "cif",
    "markov/local": "markov_local",
    "markov/global": "markov_global",
}


@dataclass
class Session:
    id: str
    dataset: Dataset
    filename: str
    created_at: float
    last_access: float
    kind: str | None = None
    data: object | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """Thread-safe in-memory session map with TTL eviction on access."""

    def __init__(self, ttl: float):
        self.ttl = ttl
        self._map: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _evict(self, now: float) -> None:
        dead = [sid for sid, s in self._map.items() if now - s.last_access > self.ttl]
        for sid in dead:
            del self._map[sid]

    def put(self, session: Session) -> None:
        with self._lock:
            self._evict(time.time())
            self._map[session.id] = session

    def get(self, sid: str) -> Session | None:
        with self._lock:
            now = time.time()
            self._evict(now)
            s = self._map.get(sid)
            if s is not None:
                s.last_access = now
            return s


def _error_body(code: str, message: str, detail=None) -> dict:
    return {"error": code, "message": message, "detail": detail}


def _error_response(exc: MsmkitError) -> JSONResponse:
    if isinstance(exc, IncompatibleMapping):
        status = 409
    elif isinstance(exc, ValidationError):
        status = 422
    elif isinstance(exc, ComputationError):
        status = 422
    else:
        status = 422
    return JSONResponse(
        status_code=status,
        content=_error_body(exc.code, str(exc), analyses.jsonable(exc.detail)),
    )


def create_app(
    upload_limit: int | None = None,
    session_ttl: float | None = None,
    timeout: float | None = None,
) -> FastAPI:
    upload_limit = int(
        upload_limit
        if upload_limit is not None
        else os.environ.get("MSMKIT_UPLOAD_LIMIT", DEFAULT_UPLOAD_LIMIT)
    )
    session_ttl = float(
        session_ttl
        if session_ttl is not None
        else os.environ.get("MSMKIT_SESSION_TTL", DEFAULT_SESSION_TTL)
    )
    timeout = float(
        timeout if timeout is not None else os.environ.get("MSMKIT_TIMEOUT", DEFAULT_TIMEOUT)
    )

    app = FastAPI(title="msmkit service", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(session_ttl)
    app.state.store = store
    pool = concurrent.futures.ThreadPoolExecutor(max_workers=8)

    @app.exception_handler(MsmkitError)
    async def msmkit_error_handler(request: Request, exc: MsmkitError):
        return _error_response(exc)

    def _not_found() -> JSONResponse:
        return JSONResponse(
            status_code=404, content=_error_body("not_found", "session not found")
        )

    @app.get("/health")
    async def health():
        return {"ok": True, "version": __version__}

    @app.post("/sessions")
    async def create_session(
        file: UploadFile = File(...), kind: str = Form(...)
    ):
        if kind not in analyses.KINDS:
            return JSONResponse(
                status_code=400,
                content=_error_body(
                    "unknown_kind",
                    f"unknown model kind {kind!r}",
                    {"allowed": list(analyses.KINDS)},
                ),
            )
        content = await file.read()
        if len(content) > upload_limit:
            return JSONResponse(
                status_code=413,
                content=_error_body(
                    "upload_too_large",
                    f"upload exceeds {upload_limit} bytes",
                    {"limit": upload_limit, "size": len(content)},
                ),
            )
        dataset = parse_csv(content)
        sid = secrets.token_urlsafe(16)
        now = time.time()
        session = Session(
            id=sid,
            dataset=dataset,
            filename=file.filename or "upload.csv",
            created_at=now,
            last_access=now,
            kind=kind,
        )
        store.put(session)
        return {
            "session_id": sid,
            "kind": kind,
            "filename": session.filename,
            "columns": [
                {"name": col.name, "type": col.kind} for col in dataset.columns
            ],
            "n_rows": dataset.n,
            "preview": analyses.jsonable(dataset.preview(20)),
        }

    @app.post("/sessions/{sid}/bind")
    async def bind_session(sid: str, body: dict):
        session = store.get(sid)
        if session is None:
            return _not_found()
        kind = body.get("kind", session.kind)
        mapping = body.get("mapping", {})
        data, report = analyses.bind_any(session.dataset, kind, mapping)
        with session.lock:
            session.kind = kind
            session.data = data
        return {"ok": True, "validation_report": report}

    def _run_with_timeout(name: str, data, params: dict):
        future = pool.submit(analyses.run_analysis, name, data, params)
        try:
            return future.result(timeout=timeout)
        except concurrent.futures.TimeoutError:
            future.cancel()
            raise

    async def run_endpoint(sid: str, analysis: str, params: dict):
        session = store.get(sid)
        if session is None:
            return _not_found()
        with session.lock:
            data = session.data
        if data is None:
            return JSONResponse(
                status_code=409,
                content=_error_body(
                    "not_bound", "session has no bound mapping; call bind first"
                ),
            )
        try:
            return _run_with_timeout(analysis, data, params)
        except concurrent.futures.TimeoutError:
            return JSONResponse(
                status_code=503,
                content=_error_body(
                    "timeout",
                    f"analysis exceeded the {timeout:g}s server limit",
                    {"analysis": analysis},
                ),
            )

    def _register(path_suffix: str, analysis_name: str) -> None:
        @app.post(f"/sessions/{{sid}}/{path_suffix}")
        async def endpoint(sid: str, params: dict | None = None):
            return await run_endpoint(sid, analysis_name, params or {})

    for suffix, name in ENDPOINTS.items():
        _register(suffix, name)

    return app
