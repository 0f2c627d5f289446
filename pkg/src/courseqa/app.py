"""HTTP JSON API over the pipeline.

Endpoints:
    POST /auth/signup  {login, password}            -> 201 {user_id}
    POST /auth/login   {login, password}            -> 200 {token, expires_at}
    POST /ask          {question, session_id}       -> 200 pipeline result (bearer)
    GET  /history?limit&offset                      -> 200 {records: [...]} (bearer)
    GET  /health                                    -> 200 service status + config echo

Per-user, at most one /ask may be in flight (429 otherwise). Every response
for /ask is emitted only after its interaction record is durable.
"""

from __future__ import annotations

import threading

from fastapi import Depends, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import (
    AuthError,
    ConflictError,
    GenerationError,
    InputError,
    NotFoundError,
    ProviderError,
)
from .pipeline import REJECTION_MESSAGE, Pipeline
from .session import InteractionRecord


class SignupRequest(BaseModel):
    login: str
    password: str


class LoginRequest(BaseModel):
    login: str
    password: str


class AskRequest(BaseModel):
    question: str
    session_id: str


class InFlightLimiter:
    """At most one concurrent request per user."""

    def __init__(self, limit: int = 1):
        self._limit = limit
        self._lock = threading.Lock()
        self._active: dict[str, int] = {}

    def acquire(self, user_id: str) -> bool:
        with self._lock:
            if self._active.get(user_id, 0) >= self._limit:
                return False
            self._active[user_id] = self._active.get(user_id, 0) + 1
            return True

    def release(self, user_id: str) -> None:
        with self._lock:
            remaining = self._active.get(user_id, 0) - 1
            if remaining <= 0:
                self._active.pop(user_id, None)
            else:
                self._active[user_id] = remaining


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _record_to_view(rec: InteractionRecord) -> dict:
    """History view mirrors the /ask policy: rejected drafts stay withheld."""
    accepted = bool(rec.verdict.get("accepted"))
    view = {
        "record_id": rec.record_id,
        "session_id": rec.session_id,
        "turn_index": rec.turn_index,
        "question": rec.question,
        "rewritten_question": rec.rewritten,
        "verdict": rec.verdict,
        "sources": rec.chunks,
        "created_at": rec.created_at,
    }
    if accepted:
        view["answer"] = rec.answer
    else:
        view["rejection_message"] = REJECTION_MESSAGE
    return view


def create_app(pipeline: Pipeline) -> FastAPI:
    app = FastAPI(title="courseqa")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.pipeline = pipeline
    app.state.limiter = InFlightLimiter(limit=1)

    def current_user(request: Request) -> str:
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise AuthError("missing bearer token")
        return pipeline.store.validate_token(header[len("Bearer ") :].strip())

    @app.exception_handler(AuthError)
    async def _auth_error(_, exc: AuthError):
        return _error(401, str(exc))

    @app.post("/auth/signup", status_code=201)
    def signup(body: SignupRequest):
        try:
            account = pipeline.store.create_user(body.login, body.password)
        except ConflictError as exc:
            return _error(409, str(exc))
        except InputError as exc:
            return _error(400, str(exc))
        return {"user_id": account.user_id}

    @app.post("/auth/login")
    def login(body: LoginRequest):
        token, expires_at = pipeline.store.authenticate(body.login, body.password)
        return {"token": token, "expires_at": expires_at}

    @app.post("/ask")
    def ask(body: AskRequest, user_id: str = Depends(current_user)):
        if not app.state.limiter.acquire(user_id):
            return _error(429, "a request is already in flight for this user")
        try:
            result = pipeline.answer_question(user_id, body.session_id, body.question)
        except InputError as exc:
            return _error(400, str(exc))
        except (GenerationError, ProviderError) as exc:
            return _error(503, f"provider unavailable: {exc}")
        finally:
            app.state.limiter.release(user_id)
        return JSONResponse(status_code=200, content=result.to_dict())

    @app.get("/history")
    def history(limit: int = 20, offset: int = 0, user_id: str = Depends(current_user)):
        try:
            records = pipeline.store.history(user_id, limit=limit, offset=offset)
        except NotFoundError as exc:
            return _error(404, str(exc))
        except InputError as exc:
            return _error(400, str(exc))
        return {"records": [_record_to_view(r) for r in records], "limit": limit, "offset": offset}

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "kb_digest": pipeline.kb.manifest_digest,
            "index_count": len(pipeline.index),
            "top_k": pipeline.config.top_k,
            "validation_threshold": pipeline.config.validation_threshold,
            "grounding_floor": pipeline.config.grounding_floor,
        }

    return app
