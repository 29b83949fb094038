"""HTTP session service for live diagnosis consoles.

Endpoints:
  POST   /sessions                   create a session
  GET    /sessions/{id}              current view
  POST   /sessions/{id}/answer       commit or what-if an answer
  GET    /sessions/{id}/next-item    recommendation only
  DELETE /sessions/{id}              drop the session

Sessions are held in memory; per-session mutation is serialized by a
store lock. Views are pure projections of library state.
"""

from __future__ import annotations

import math
import threading
from typing import Mapping, Union

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import adaptive, bn
from .adaptive import Session, TACTICS, new_session, next_item, session_step
from .bn import InconsistentEvidenceError, posterior, rank_classes
from .domain import DEFAULT_DOMAIN, DomainError, SCHEMES, uniform_priors
from .fixtures import table2_priors


class CreateSessionRequest(BaseModel):
    tactic: str = adaptive.MAX_GAIN
    scheme: str = "band"
    pcm: float = Field(default=0.11, ge=0.0, le=1.0)
    priors: Union[str, dict[str, float]] = "uniform"


class AnswerRequest(BaseModel):
    type_id: int
    state: str
    what_if: bool = False


def _resolve_priors(spec: Union[str, Mapping[str, float]]) -> dict[str, float]:
    if isinstance(spec, str):
        if spec == "uniform":
            return uniform_priors()
        if spec == "table2":
            return table2_priors()
        raise HTTPException(400, detail=f"unknown priors preset {spec!r}")
    priors = {str(k): float(v) for k, v in spec.items()}
    unknown = set(priors) - set(DEFAULT_DOMAIN.fine_classes)
    if unknown:
        raise HTTPException(400, detail=f"unknown classes in priors: {sorted(unknown)}")
    if abs(sum(priors.values()) - 1.0) > 1e-6:
        raise HTTPException(400, detail="priors must sum to 1")
    return priors


def _wire_ratio(r: float) -> float | None:
    # JSON has no infinity; the infinite-ratio flag travels as null.
    return None if math.isinf(r) else round(r, 9)


def session_view(session: Session) -> dict:
    fine = session.fine_posterior()
    coarse = posterior(session.net, {}, session.net.meta.get("coarse_node", "coarseClass"))
    if session.last_ratios is not None:
        ratios = {
            c: _wire_ratio(r) for c, r in zip(fine.states, session.last_ratios)
        }
    else:
        ratios = {c: 1.0 for c in fine.states}
    return {
        "session_id": session.session_id,
        "tactic": session.tactic,
        "scheme": session.scheme,
        "pcm": session.pcm,
        "fine_posterior": [
            {"state": s, "probability": round(p, 9)} for s, p in rank_classes(fine)
        ],
        "coarse_posterior": [
            {"state": s, "probability": round(p, 9)} for s, p in rank_classes(coarse)
        ],
        "change_ratios": ratios,
        "recommendation": next_item(session),
        "history": [
            {"type_id": a.type_id, "state": a.state, "timestamp": a.timestamp}
            for a in session.history
        ],
    }


def create_app() -> FastAPI:
    app = FastAPI(title="dctdiag session service")
    sessions: dict[str, Session] = {}
    lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, detail=f"unknown session {session_id!r}")
        return session

    @app.post("/sessions", status_code=201)
    def create(req: CreateSessionRequest) -> dict:
        if req.tactic not in TACTICS:
            raise HTTPException(400, detail=f"unknown tactic {req.tactic!r}")
        if req.scheme not in SCHEMES:
            raise HTTPException(400, detail=f"unknown scheme {req.scheme!r}")
        priors = _resolve_priors(req.priors)
        try:
            session = new_session(req.tactic, req.scheme, req.pcm, priors)
        except (DomainError, adaptive.SessionError) as exc:
            raise HTTPException(400, detail=str(exc))
        with lock:
            sessions[session.session_id] = session
        return session_view(session)

    @app.get("/sessions/{session_id}")
    def view(session_id: str) -> dict:
        return session_view(get_session(session_id))

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, req: AnswerRequest) -> dict:
        with lock:
            session = get_session(session_id)
            try:
                result = session_step(session, req.type_id, req.state)
            except InconsistentEvidenceError as exc:
                raise HTTPException(409, detail=str(exc))
            except (bn.BnError, adaptive.SessionError, DomainError) as exc:
                raise HTTPException(400, detail=str(exc))
            if not req.what_if:
                sessions[session_id] = result.session
        return session_view(result.session)

    @app.get("/sessions/{session_id}/next-item")
    def next_item_view(session_id: str) -> dict:
        return {"type_id": next_item(get_session(session_id))}

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete(session_id: str) -> Response:
        with lock:
            if session_id not in sessions:
                raise HTTPException(404, detail=f"unknown session {session_id!r}")
            del sessions[session_id]
        return Response(status_code=204)

    return app


def serve(host: str = "127.0.0.1", port: int = 8008) -> None:  # pragma: no cover
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port)
