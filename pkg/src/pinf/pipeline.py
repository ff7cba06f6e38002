"""The gating pipeline: pass/retake decisions with ranked flaw feedback, the
bounded retake session loop, dataset filtering, and captioner backends.

The gate uses a closed boundary (predicted unrecognizability >= tau means
retake): over-detection costs one extra retake, a missed poor image costs the
user a wrong caption. Every retake decision carries at least one feedback
entry, so the user always hears a reason.
"""

from __future__ import annotations

import hashlib
import math
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .images import DecodeError, RasterImage, decode_image
from .model import QualityModel
from .quality import FLAW_ORDER, OUTPUT_NAMES, FlawKind, QualityPrediction, display_severity

PASS = "pass"
RETAKE = "retake"

STATE_OPEN = "open"
STATE_CAPTIONED = "captioned"
STATE_EXHAUSTED = "exhausted"

DEFAULT_TAU = 2.0
DEFAULT_FLAW_FEEDBACK_THRESHOLD = 2.0
DEFAULT_MAX_ATTEMPTS = 5

_MESSAGES = {
    FlawKind.FRAMING: "The subject is out of frame (severity {sev}/5). "
                      "Recenter the camera on the subject.",
    FlawKind.BLUR: "The picture is blurry (severity {sev}/5). Hold the camera steady.",
    FlawKind.DARK: "The picture is too dark (severity {sev}/5). "
                   "Add light or move toward a light source.",
    FlawKind.BRIGHT: "The picture is too bright (severity {sev}/5). "
                     "Reduce glare or step away from the light.",
    FlawKind.OBSCURED: "Something is blocking the view (severity {sev}/5). "
                       "Check the lens for fingers or objects.",
    FlawKind.ROTATION: "The picture is tilted (severity {sev}/5). Hold the camera level.",
}


class CaptionerError(RuntimeError):
    """Captioner unavailable: transport failure, bad status, bad body, or
    deadline exceeded."""


class UnknownImageError(KeyError):
    """Stub captioner has no catalog entry for the image."""


@dataclass(frozen=True)
class GateConfig:
    tau_unrecognizable: float = DEFAULT_TAU
    flaw_feedback_threshold: float = DEFAULT_FLAW_FEEDBACK_THRESHOLD
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if not (math.isfinite(self.tau_unrecognizable)
                and math.isfinite(self.flaw_feedback_threshold)):
            raise ValueError("gate thresholds must be finite")


@dataclass(frozen=True)
class FeedbackItem:
    kind: FlawKind
    raw_severity: float
    severity: float  # display-clamped
    message: str

    def to_dict(self) -> dict:
        return {"flaw": self.kind.value, "severity": self.severity, "message": self.message}


@dataclass(frozen=True)
class GateDecision:
    verdict: str  # PASS or RETAKE
    feedback: tuple[FeedbackItem, ...]

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "feedback": [f.to_dict() for f in self.feedback]}


def feedback_message(kind: FlawKind, severity: float) -> str:
    """Deterministic per-flaw advice; severity rendered display-clamped."""
    return _MESSAGES[kind].format(sev=f"{display_severity(severity):.1f}")


def _item(kind: FlawKind, raw: float) -> FeedbackItem:
    return FeedbackItem(kind, raw, display_severity(raw), feedback_message(kind, raw))


def gate(pred: QualityPrediction, cfg: GateConfig) -> GateDecision:
    """Retake iff predicted unrecognizability >= tau (closed boundary).

    Feedback lists every flaw at or above the feedback threshold, sorted by
    descending raw severity (ties in canonical flaw order); when none
    qualify, the single worst flaw is reported so a retake always has a
    reason. Pass decisions carry no feedback.
    """
    if pred.unrecognizable_hat < cfg.tau_unrecognizable:
        return GateDecision(PASS, ())
    ranked = sorted(
        ((pred.flaws_hat[k], i, k) for i, k in enumerate(FLAW_ORDER)),
        key=lambda t: (-t[0], t[1]),
    )
    chosen = [(sev, k) for sev, _, k in ranked if sev >= cfg.flaw_feedback_threshold]
    if not chosen:
        sev, _, k = ranked[0]
        chosen = [(sev, k)]
    return GateDecision(RETAKE, tuple(_item(k, sev) for sev, k in chosen))


# --- sessions ----------------------------------------------------------------


@dataclass
class AttemptRecord:
    index: int
    prediction: QualityPrediction | None
    decision: GateDecision | None
    error: str | None
    timestamp: float

    def to_dict(self) -> dict:
        pred = None
        if self.prediction is not None:
            vec = self.prediction.as_vector()
            pred = {
                "raw": dict(zip(OUTPUT_NAMES, vec)),
                "display": dict(zip(OUTPUT_NAMES, (display_severity(v) for v in vec))),
            }
        return {
            "index": self.index,
            "prediction": pred,
            "decision": self.decision.to_dict() if self.decision else None,
            "error": self.error,
            "timestamp": self.timestamp,
        }


@dataclass
class Session:
    session_id: str
    attempts: list[AttemptRecord] = field(default_factory=list)
    state: str = STATE_OPEN
    caption: str | None = None
    warning: bool = False

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "attempts": [a.to_dict() for a in self.attempts],
            "state": self.state,
            "caption": self.caption,
            "warning": self.warning,
        }


def new_session_id() -> str:
    return uuid.uuid4().hex


def run_session(images, model: QualityModel, captioner, cfg: GateConfig,
                session_id: str | None = None, clock=None) -> Session:
    """Drive the retake loop over an ordered supplier of image bytes.

    Each attempt is predicted and gated; a pass goes straight to the
    captioner and terminates the session. After max_attempts retakes the
    best attempt (lowest predicted unrecognizability) is captioned
    best-effort and the session terminates exhausted with a warning. Decode
    failures consume an attempt and carry an explanatory note. A captioner
    failure leaves the session open with the error recorded.
    """
    now = clock if clock is not None else time.time
    session = Session(session_id or new_session_id())
    best = None  # (score, image payload, attempt record) of the best retake
    supplier = iter(images)
    for index in range(1, cfg.max_attempts + 1):
        try:
            data = next(supplier)
        except StopIteration:
            return session  # supplier ran dry; session stays open
        try:
            img = data if isinstance(data, RasterImage) else decode_image(data)
        except DecodeError as exc:
            session.attempts.append(
                AttemptRecord(index, None, None, f"decode failed: {exc}", now())
            )
            continue
        pred = model.predict(img)
        decision = gate(pred, cfg)
        record = AttemptRecord(index, pred, decision, None, now())
        session.attempts.append(record)
        if decision.verdict == PASS:
            try:
                session.caption = captioner.caption(data)
            except CaptionerError as exc:
                record.error = f"captioner failed: {exc}"
                return session  # open; the image was good, nothing to retake
            session.state = STATE_CAPTIONED
            return session
        if best is None or pred.unrecognizable_hat < best[0]:
            best = (pred.unrecognizable_hat, data, record)
    # attempts exhausted without a pass: best-effort caption, flagged
    if best is not None:
        _, data, record = best
        try:
            session.caption = captioner.caption(data)
        except CaptionerError as exc:
            record.error = f"captioner failed: {exc}"
            return session  # still open
    session.state = STATE_EXHAUSTED
    session.warning = True
    return session


# --- dataset filtering ---------------------------------------------------------


def filter_dataset(samples, model: QualityModel, tau: float):
    """Keep samples predicted below tau; returns (kept, excluded_count).

    samples: iterable of (image, annotation) where image is a RasterImage,
    raw bytes, or a path. Decode problems abort with the offending image id.
    """
    kept = []
    excluded = 0
    for item, ann in samples:
        try:
            img = _as_image(item)
        except (DecodeError, OSError) as exc:
            raise DecodeError(f"image {ann.image_id!r}: {exc}") from None
        pred = model.predict(img)
        if pred.unrecognizable_hat < tau:
            kept.append((item, ann))
        else:
            excluded += 1
    return kept, excluded


def _as_image(item) -> RasterImage:
    if isinstance(item, RasterImage):
        return item
    if isinstance(item, (bytes, bytearray)):
        return decode_image(bytes(item))
    return decode_image(Path(item).read_bytes())


# --- captioners -----------------------------------------------------------------


class StubCaptioner:
    """Deterministic stand-in for a neural captioner, keyed on ground truth:
    a clean caption when the annotated unrecognizable grade is <= 1, else a
    degraded one. Byte payloads are resolved to image ids via a resolver
    (default: SHA-256 of the exact file bytes)."""

    def __init__(self, catalog: dict, severities: dict, resolver=None,
                 fallback: str | None = None):
        self.catalog = catalog
        self.severities = severities
        self.resolver = resolver
        self.fallback = fallback
        self.info = {"kind": "stub", "images": len(catalog)}

    @classmethod
    def from_corpus_dir(cls, corpus_dir, fallback: str | None = None) -> "StubCaptioner":
        from .corpus import load_annotations, load_catalog

        corpus_dir = Path(corpus_dir)
        catalog = load_catalog(corpus_dir)
        corpus = load_annotations(corpus_dir)
        severities = {e.annotation.image_id: e.annotation.unrecognizable
                      for e in corpus.entries}
        digests = {}
        for e in corpus.entries:
            digests[hashlib.sha256(e.path.read_bytes()).hexdigest()] = e.annotation.image_id

        def resolve(data: bytes):
            return digests.get(hashlib.sha256(data).hexdigest())

        return cls(catalog, severities, resolver=resolve, fallback=fallback)

    def caption_id(self, image_id: str) -> str:
        entry = self.catalog.get(image_id)
        if entry is None:
            raise UnknownImageError(f"no catalog entry for image {image_id!r}")
        grade = self.severities.get(image_id)
        if grade is None:
            raise UnknownImageError(f"no ground-truth grade for image {image_id!r}")
        return entry["clean"] if grade <= 1 else entry["degraded"]

    def caption(self, data: bytes, media_type: str | None = None) -> str:
        image_id = self.resolver(bytes(data)) if self.resolver else None
        if image_id is None:
            if self.fallback is not None:
                return self.fallback
            raise CaptionerError("stub captioner does not recognize this image")
        return self.caption_id(image_id)


class RemoteCaptioner:
    """HTTP captioner client: POSTs raw image bytes, expects {"caption": ...}.

    One retry on transport failure or a non-2xx status; the whole call is
    bounded by the configured deadline.
    """

    def __init__(self, endpoint: str, deadline: float = 10.0, retries: int = 1,
                 transport: httpx.BaseTransport | None = None):
        if not endpoint:
            raise ValueError("remote captioner needs an endpoint URL")
        if deadline <= 0:
            raise ValueError("deadline must be positive")
        self.endpoint = endpoint
        self.deadline = deadline
        self.retries = retries
        self._transport = transport
        self.info = {"kind": "remote", "endpoint": endpoint, "deadline_s": deadline}

    def caption(self, data: bytes, media_type: str = "application/octet-stream") -> str:
        start = time.monotonic()
        last_error = None
        for _ in range(self.retries + 1):
            remaining = self.deadline - (time.monotonic() - start)
            if remaining <= 0:
                raise CaptionerError(
                    f"deadline of {self.deadline}s exceeded ({last_error or 'no attempt finished'})"
                )
            try:
                with httpx.Client(transport=self._transport, timeout=remaining) as client:
                    resp = client.post(
                        self.endpoint, content=bytes(data),
                        headers={"Content-Type": media_type},
                    )
            except httpx.TimeoutException as exc:
                last_error = f"timed out: {exc}"
                continue
            except httpx.HTTPError as exc:
                last_error = f"transport failure: {exc}"
                continue
            if not 200 <= resp.status_code < 300:
                last_error = f"status {resp.status_code}"
                continue
            try:
                doc = resp.json()
            except ValueError as exc:
                raise CaptionerError(f"malformed captioner response: {exc}") from None
            if not isinstance(doc, dict) or not isinstance(doc.get("caption"), str):
                raise CaptionerError("malformed captioner response: missing caption field")
            return doc["caption"]
        raise CaptionerError(f"captioner unavailable after retry: {last_error}")
