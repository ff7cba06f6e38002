"""HTTP service: prediction, retake sessions, and captioning over REST.

Endpoints (JSON bodies UTF-8; images uploaded as a raw body with a media
type header or as a multipart part named "image"):

  GET  /healthz                     liveness + journal status
  GET  /v1/model                    model metadata + inference counter
  POST /v1/predict                  one inference -> prediction + gate decision
  POST /v1/sessions                 open a retake session
  POST /v1/sessions/{id}/attempts   submit an attempt image
  GET  /v1/sessions/{id}            full session state

Sessions live in memory; an optional append-only JSON-lines journal restores
open sessions across restarts (replay is idempotent). The model and
calibration are immutable after load; mutations are serialized per session;
the inference counter is updated atomically. No captioner call is made while
holding a session lock.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from ._backend import backend_name
from .calibration import load_calibration
from .features import FEATURE_LAYOUT_VERSION
from .images import DecodeError, decode_image
from .model import QualityModel, load_model
from .pipeline import (
    PASS,
    STATE_CAPTIONED,
    STATE_EXHAUSTED,
    STATE_OPEN,
    AttemptRecord,
    CaptionerError,
    FeedbackItem,
    GateConfig,
    GateDecision,
    RemoteCaptioner,
    Session,
    StubCaptioner,
    gate,
    new_session_id,
)
from .quality import OUTPUT_NAMES, FlawKind, QualityPrediction, display_severity

log = logging.getLogger("pinf.service")

DEFAULT_MAX_UPLOAD = 16 * 1024 * 1024
ENV_OVERRIDES = {
    "PINF_PORT": "port",
    "PINF_MODEL": "model",
    "PINF_CALIB": "calib",
    "PINF_CAPTIONER_URL": "remote_endpoint",
}


@dataclass
class ServiceConfig:
    model: str
    port: int = 8000
    calib: str | None = None
    captioner: str = "stub"  # stub | remote
    corpus: str | None = None  # stub mode: catalog + ground truth source
    remote_endpoint: str | None = None
    deadline_s: float = 10.0
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD
    journal: str | None = None
    cors_origins: list[str] = field(default_factory=list)
    max_attempts: int = 5
    stub_fallback_caption: str = "a photo"

    def __post_init__(self):
        if not 0 < self.port < 65536:
            raise ValueError(f"invalid port {self.port}")
        if self.deadline_s <= 0:
            raise ValueError("deadline must be positive")
        if self.captioner not in ("stub", "remote"):
            raise ValueError(f"unknown captioner mode {self.captioner!r}")


def load_service_config(path) -> ServiceConfig:
    """Read the JSON config and apply PINF_* environment overrides
    (environment wins; PINF_CAPTIONER_URL also switches mode to remote)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("service config must be a JSON object")
    return apply_env_overrides(doc)


def apply_env_overrides(doc: dict, env=None) -> ServiceConfig:
    env = os.environ if env is None else env
    doc = dict(doc)
    for var, key in ENV_OVERRIDES.items():
        if env.get(var):
            doc[key] = env[var]
    if env.get("PINF_PORT"):
        doc["port"] = int(env["PINF_PORT"])
    if env.get("PINF_CAPTIONER_URL"):
        doc["captioner"] = "remote"
    known = {f for f in ServiceConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown service config keys: {sorted(unknown)}")
    return ServiceConfig(**doc)


class _Journal:
    """Append-only JSON-lines event log; failures never fail a request."""

    def __init__(self, path):
        self.path = Path(path)
        self.lock = threading.Lock()
        self.error: str | None = None

    def append(self, event: dict):
        try:
            with self.lock:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(event, sort_keys=True) + "\n")
            self.error = None
        except OSError as exc:
            self.error = str(exc)
            log.warning("journal write failed: %s", exc)

    def replay(self) -> dict[str, Session]:
        sessions: dict[str, Session] = {}
        if not self.path.exists():
            return sessions
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                _apply_event(sessions, event)
        return sessions


def _apply_event(sessions: dict[str, Session], event: dict):
    kind = event.get("event")
    sid = event.get("session_id")
    if not sid:
        return
    if kind == "create":
        sessions.setdefault(sid, Session(sid))
        return
    if kind != "attempt":
        return
    session = sessions.setdefault(sid, Session(sid))
    att = event.get("attempt") or {}
    index = att.get("index")
    if any(a.index == index for a in session.attempts):
        pass  # replaying twice: the attempt is already applied
    else:
        pred_doc = att.get("prediction")
        prediction = None
        if pred_doc and "raw" in pred_doc:
            raw = pred_doc["raw"]
            prediction = QualityPrediction.from_vector([raw[k] for k in OUTPUT_NAMES])
        decision = None
        dec_doc = att.get("decision")
        if dec_doc:
            decision = GateDecision(
                dec_doc.get("verdict"),
                tuple(
                    FeedbackItem(
                        FlawKind(f["flaw"]), f.get("severity", 0.0),
                        f.get("severity", 0.0), f.get("message", ""),
                    )
                    for f in dec_doc.get("feedback", [])
                ),
            )
        session.attempts.append(
            AttemptRecord(index, prediction, decision, att.get("error"),
                          att.get("timestamp", 0.0))
        )
        session.attempts.sort(key=lambda a: a.index)
    session.state = event.get("state", session.state)
    session.caption = event.get("caption", session.caption)
    session.warning = bool(event.get("warning", session.warning))


class ServiceState:
    """Mutable runtime: model, captioner, sessions, counters, journal."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.model: QualityModel | None = None
        model_path = Path(config.model)
        if model_path.exists():
            self.model = load_model(model_path)
        tau = GateConfig().tau_unrecognizable
        flaw_thr = GateConfig().flaw_feedback_threshold
        if config.calib:
            calib = load_calibration(config.calib)
            tau = calib.tau_unrecognizable
            flaw_thr = calib.flaw_feedback_threshold
        self.gate_cfg = GateConfig(tau, flaw_thr, config.max_attempts)
        if config.captioner == "remote":
            if not config.remote_endpoint:
                raise ValueError("remote captioner mode needs remote_endpoint")
            self.captioner = RemoteCaptioner(config.remote_endpoint, config.deadline_s)
        else:
            if config.corpus:
                self.captioner = StubCaptioner.from_corpus_dir(
                    config.corpus, fallback=config.stub_fallback_caption
                )
            else:
                self.captioner = StubCaptioner(
                    {}, {}, resolver=None, fallback=config.stub_fallback_caption
                )
        self.journal = _Journal(config.journal) if config.journal else None
        self.sessions: dict[str, Session] = self.journal.replay() if self.journal else {}
        self.best_bytes: dict[str, tuple[float, bytes]] = {}
        self._counter_lock = threading.Lock()
        self._sessions_lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}
        self.inference_count = 0

    def predict(self, img):
        """The single model inference per request, counted atomically."""
        pred = self.model.predict(img)
        with self._counter_lock:
            self.inference_count += 1
        return pred

    def create_session(self) -> Session:
        session = Session(new_session_id())
        with self._sessions_lock:
            self.sessions[session.session_id] = session
            self._session_locks[session.session_id] = threading.Lock()
        if self.journal:
            self.journal.append({"event": "create", "session_id": session.session_id,
                                 "ts": time.time()})
        return session

    def get_session(self, sid: str) -> Session | None:
        with self._sessions_lock:
            return self.sessions.get(sid)

    def session_lock(self, sid: str) -> threading.Lock:
        with self._sessions_lock:
            return self._session_locks.setdefault(sid, threading.Lock())

    def journal_attempt(self, session: Session, record: AttemptRecord):
        if self.journal:
            self.journal.append({
                "event": "attempt",
                "session_id": session.session_id,
                "attempt": record.to_dict(),
                "state": session.state,
                "caption": session.caption,
                "warning": session.warning,
                "ts": time.time(),
            })


def _prediction_payload(pred) -> dict:
    vec = pred.as_vector()
    return {
        "raw": dict(zip(OUTPUT_NAMES, vec)),
        "display": dict(zip(OUTPUT_NAMES, (display_severity(v) for v in vec))),
    }


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="pinf", version="0.1.0")
    app.state.pinf = state
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    async def read_image(request: Request) -> bytes | JSONResponse:
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > config.max_upload_bytes:
            return JSONResponse({"error": "payload too large"}, status_code=413)
        ctype = request.headers.get("content-type", "")
        if ctype.startswith("multipart/form-data"):
            form = await request.form()
            part = form.get("image")
            if part is None:
                return JSONResponse({"error": "multipart upload needs an 'image' part"},
                                    status_code=400)
            data = await part.read() if hasattr(part, "read") else str(part).encode()
        else:
            data = await request.body()
        if len(data) > config.max_upload_bytes:
            return JSONResponse({"error": "payload too large"}, status_code=413)
        if not data:
            return JSONResponse({"error": "empty image payload"}, status_code=400)
        return data

    @app.get("/healthz")
    async def healthz():
        journal = "disabled"
        if state.journal:
            journal = f"error: {state.journal.error}" if state.journal.error else "ok"
        return {
            "status": "ok",
            "model_loaded": state.model is not None,
            "journal": journal,
        }

    @app.get("/v1/model")
    async def model_info():
        if state.model is None:
            return JSONResponse({"error": "model not loaded"}, status_code=503)
        return {
            "outputs": list(OUTPUT_NAMES),
            "feature_layout": FEATURE_LAYOUT_VERSION,
            "hidden": state.model.params.hidden,
            "train_meta": state.model.train_meta,
            "inference_count": state.inference_count,
            "tau_unrecognizable": state.gate_cfg.tau_unrecognizable,
            "flaw_feedback_threshold": state.gate_cfg.flaw_feedback_threshold,
            "backend": backend_name(),
            "captioner": state.captioner.info,
        }

    @app.post("/v1/predict")
    async def predict(request: Request):
        if state.model is None:
            return JSONResponse({"error": "model not loaded"}, status_code=503)
        data = await read_image(request)
        if isinstance(data, JSONResponse):
            return data
        return await run_in_threadpool(_predict_sync, state, data)

    @app.post("/v1/sessions")
    async def create_session():
        session = await run_in_threadpool(state.create_session)
        return {"session_id": session.session_id}

    @app.get("/v1/sessions/{sid}")
    async def get_session(sid: str):
        session = state.get_session(sid)
        if session is None:
            return JSONResponse({"error": f"unknown session {sid!r}"}, status_code=404)
        return session.to_dict()

    @app.post("/v1/sessions/{sid}/attempts")
    async def attempt(sid: str, request: Request):
        if state.model is None:
            return JSONResponse({"error": "model not loaded"}, status_code=503)
        if state.get_session(sid) is None:
            return JSONResponse({"error": f"unknown session {sid!r}"}, status_code=404)
        data = await read_image(request)
        if isinstance(data, JSONResponse):
            return data
        return await run_in_threadpool(_attempt_sync, state, sid, data)

    return app


def _predict_sync(state: ServiceState, data: bytes):
    try:
        img = decode_image(data)
    except DecodeError as exc:
        return JSONResponse({"error": f"undecodable image: {exc}"}, status_code=400)
    pred = state.predict(img)
    decision = gate(pred, state.gate_cfg)
    return {
        "prediction": _prediction_payload(pred),
        "decision": decision.verdict,
        "feedback": [f.to_dict() for f in decision.feedback],
        "model": {
            "feature_layout": FEATURE_LAYOUT_VERSION,
            "tau_unrecognizable": state.gate_cfg.tau_unrecognizable,
        },
    }


def _attempt_sync(state: ServiceState, sid: str, data: bytes):
    try:
        img = decode_image(data)
    except DecodeError as exc:
        return JSONResponse({"error": f"undecodable image: {exc}"}, status_code=400)

    lock = state.session_lock(sid)
    with lock:
        session = state.get_session(sid)
        if session is None:
            return JSONResponse({"error": f"unknown session {sid!r}"}, status_code=404)
        if session.state != STATE_OPEN:
            return JSONResponse(
                {"error": f"session is terminal ({session.state})"}, status_code=409
            )
        exhausted_retry = len(session.attempts) >= state.gate_cfg.max_attempts
        if not exhausted_retry:
            pred = state.predict(img)
            decision = gate(pred, state.gate_cfg)
            record = AttemptRecord(len(session.attempts) + 1, pred, decision, None, time.time())
            session.attempts.append(record)
            score = pred.unrecognizable_hat
            best = state.best_bytes.get(sid)
            if best is None or score < best[0]:
                state.best_bytes[sid] = (score, data)
        else:
            # captioner kept failing at the attempt cap: retry termination
            # without consuming a new attempt or inference
            record = session.attempts[-1]
            decision = record.decision
        at_cap = len(session.attempts) >= state.gate_cfg.max_attempts
        needs_caption = decision.verdict == PASS or at_cap
        payload = data
        if needs_caption and decision.verdict != PASS:
            stored = state.best_bytes.get(sid)
            if stored is not None:
                payload = stored[1]

    # captioner call happens outside the session lock
    caption = None
    caption_error = None
    if needs_caption:
        try:
            caption = state.captioner.caption(payload)
        except CaptionerError as exc:
            caption_error = str(exc)

    with lock:
        session = state.get_session(sid)
        if session is None:
            return JSONResponse({"error": f"unknown session {sid!r}"}, status_code=404)
        if caption_error is not None:
            record.error = f"captioner failed: {caption_error}"
            state.journal_attempt(session, record)
            return JSONResponse(
                {"error": f"captioner unavailable: {caption_error}",
                 "session_id": sid, "attempt": record.to_dict()},
                status_code=502,
            )
        if needs_caption and session.state == STATE_OPEN:
            session.caption = caption
            if decision.verdict == PASS:
                session.state = STATE_CAPTIONED
            else:
                session.state = STATE_EXHAUSTED
                session.warning = True
            state.best_bytes.pop(sid, None)
        state.journal_attempt(session, record)
        return {
            "session_id": sid,
            "attempt": record.to_dict(),
            "state": session.state,
            "caption": session.caption,
            "warning": session.warning,
            "exhausted": session.state == STATE_EXHAUSTED,
        }


def serve(config: ServiceConfig, host: str = "127.0.0.1"):
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=host, port=config.port, log_level="info")
