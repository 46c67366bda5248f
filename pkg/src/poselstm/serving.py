"""Real-time classification sessions over a WebSocket wire protocol.

Each client connection owns a sliding window of the most recent frames
(default 8). Every pushed frame is sanitized and appended, padding frames
included, so a stream of lost poses makes stale content age out of the
window. Classification always runs a fresh infer-mode forward over
[window frames, tail padding to max_seq_len]; there is no incremental state
to drift, so a reply is bit-identical to recomputing from scratch.

Wire messages (one JSON document per WebSocket text message):
  inbound   {"type": "frame", "seq_no": int?, "landmarks": 33x[x, y, z, v]}
            {"type": "reset"}
  outbound  {"type": "classification", "seq_no": int|null, "label": str,
             "probs": {class name: float, ...}, "window_fill": int}
            {"type": "error", "reason": str}
Landmark values are numbers or the literal string "NaN".
"""

# No postponed annotation evaluation here: the WebSocket endpoint's
# annotations must be resolvable at definition time inside create_app,
# where the fastapi import lives.
import collections
import json
import math
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from .landmarks import (
    NUM_POINTS,
    POINT_FEATURES,
    ExerciseLabel,
    LandmarkFrame,
    MalformedInputError,
    pad_or_truncate,
    sanitize_frame,
)
from .model import (
    ContractViolation,
    LoadedModel,
    ModelConfig,
    ModelParams,
    forward,
    load_model,
)

DEFAULT_WINDOW_SIZE = 8


@dataclass(frozen=True)
class ClassificationResult:
    label: ExerciseLabel
    probs: np.ndarray
    window_fill: int
    seq_no: Optional[int] = None


class ClassificationEngine:
    """Shared immutable model; classifies window contents on demand."""

    def __init__(self, params: ModelParams, config: ModelConfig,
                 class_names: Sequence[str]) -> None:
        self.params = params
        self.config = config
        self.class_names = tuple(class_names)

    @classmethod
    def from_file(cls, path, max_seq_len: Optional[int] = None) -> "ClassificationEngine":
        """Load a model file; a max_seq_len override must match the file."""
        loaded: LoadedModel = load_model(path)
        if max_seq_len is not None and max_seq_len != loaded.config.max_seq_len:
            raise ContractViolation(
                f"requested max_seq_len {max_seq_len} does not match the model "
                f"file's {loaded.config.max_seq_len}")
        return cls(loaded.params, loaded.config, loaded.class_names)

    def classify_window(self, frames: Sequence[LandmarkFrame]):
        """Forward over [frames, tail padding to max_seq_len]; returns probs."""
        seq = pad_or_truncate(list(frames), self.config.max_seq_len)
        probs, _ = forward(seq, self.params, self.config, mode="infer",
                           class_names=self.class_names)
        return probs


class StreamSession:
    """One client's sliding window plus counters; processed sequentially."""

    def __init__(self, engine: ClassificationEngine, session_id: Optional[str] = None,
                 window_size: int = DEFAULT_WINDOW_SIZE) -> None:
        if not 1 <= window_size <= engine.config.max_seq_len:
            raise ContractViolation(
                f"window_size must be in [1, max_seq_len={engine.config.max_seq_len}], "
                f"got {window_size}")
        self.engine = engine
        self.session_id = session_id if session_id is not None else uuid.uuid4().hex[:12]
        self.window_size = window_size
        self._window: collections.deque[LandmarkFrame] = collections.deque(maxlen=window_size)
        self.frames_received = 0
        self.frames_dropped = 0

    @property
    def window_fill(self) -> int:
        return sum(1 for f in self._window if not f.is_padding)

    def window_frames(self) -> list[LandmarkFrame]:
        return list(self._window)

    def reset(self) -> None:
        self._window.clear()

    def push_frame(self, raw_landmarks, seq_no: Optional[int] = None) -> ClassificationResult:
        """Sanitize, append (evicting the oldest), classify the window.

        A frame carrying any non-finite value enters the window as padding,
        still displacing the oldest frame; malformed arity raises
        MalformedInputError and leaves the window untouched.
        """
        frame = sanitize_frame(raw_landmarks)
        self._window.append(frame)
        self.frames_received += 1
        if frame.is_padding:
            self.frames_dropped += 1
        probs = self.engine.classify_window(self._window)
        return ClassificationResult(
            label=probs.argmax_label,
            probs=probs.probs,
            window_fill=self.window_fill,
            seq_no=seq_no,
        )


def _wire_value(v, where: str) -> float:
    if isinstance(v, str):
        if v == "NaN":
            return math.nan
        raise MalformedInputError(f'{where}: non-numeric value {v!r} (only "NaN" is allowed)')
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedInputError(f"{where}: expected a number, got {type(v).__name__}")
    return float(v)


def parse_client_message(text: str) -> dict:
    """Decode one inbound message; raises MalformedInputError with context."""
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedInputError(f"invalid JSON: {e}") from None
    if not isinstance(msg, dict) or "type" not in msg:
        raise MalformedInputError("message must be an object with a 'type' field")
    kind = msg["type"]
    if kind == "reset":
        return {"type": "reset"}
    if kind != "frame":
        raise MalformedInputError(f"unknown message type {kind!r}")
    seq_no = msg.get("seq_no")
    if seq_no is not None and not isinstance(seq_no, int):
        raise MalformedInputError("seq_no must be an integer")
    landmarks = msg.get("landmarks")
    if not isinstance(landmarks, list) or len(landmarks) != NUM_POINTS:
        raise MalformedInputError(
            f"landmarks must be an array of {NUM_POINTS} points, got "
            f"{len(landmarks) if isinstance(landmarks, list) else type(landmarks).__name__}")
    values = np.empty((NUM_POINTS, POINT_FEATURES), dtype=np.float32)
    for p, pt in enumerate(landmarks):
        if not isinstance(pt, list) or len(pt) != POINT_FEATURES:
            raise MalformedInputError(f"landmark {p} must have {POINT_FEATURES} values")
        for k in range(POINT_FEATURES):
            values[p, k] = _wire_value(pt[k], f"landmark {p}")
    return {"type": "frame", "seq_no": seq_no, "landmarks": values}


def encode_classification(result: ClassificationResult, class_names: Sequence[str]) -> str:
    probs = {name: float(np.float32(p)) for name, p in zip(class_names, result.probs)}
    return json.dumps({
        "type": "classification",
        "seq_no": result.seq_no,
        "label": result.label.name,
        "probs": probs,
        "window_fill": result.window_fill,
    }, separators=(",", ":"))


def encode_error(reason: str) -> str:
    return json.dumps({"type": "error", "reason": reason}, separators=(",", ":"))


class SessionLog:
    """Append-only JSONL log: one line per classification."""

    def __init__(self, path) -> None:
        self._fh = open(path, "a", encoding="utf-8")

    def write(self, session_id: str, result: ClassificationResult,
              class_names: Sequence[str]) -> None:
        line = json.dumps({
            "ts": datetime.now(timezone.utc).isoformat(),
            "session": session_id,
            "seq_no": result.seq_no,
            "label": result.label.name,
            "window_fill": result.window_fill,
            "probs": {n: float(np.float32(p)) for n, p in zip(class_names, result.probs)},
        }, separators=(",", ":"))
        self._fh.write(line + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def create_app(engine: ClassificationEngine, window_size: int = DEFAULT_WINDOW_SIZE,
               log: Optional[SessionLog] = None):
    """FastAPI app: GET /healthz and the /ws classification endpoint."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    app = FastAPI(title="exercise classification service")

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "classes": list(engine.class_names),
            "window_size": window_size,
            "max_seq_len": engine.config.max_seq_len,
        }

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        session = StreamSession(engine, window_size=window_size)
        try:
            while True:
                text = await websocket.receive_text()
                try:
                    msg = parse_client_message(text)
                except MalformedInputError as e:
                    await websocket.send_text(encode_error(str(e)))
                    continue
                if msg["type"] == "reset":
                    session.reset()
                    continue
                result = session.push_frame(msg["landmarks"], seq_no=msg["seq_no"])
                if log is not None:
                    log.write(session.session_id, result, engine.class_names)
                await websocket.send_text(encode_classification(result, engine.class_names))
        except WebSocketDisconnect:
            pass

    return app


def parse_listen_address(listen: str) -> tuple[str, int]:
    host, sep, port = listen.rpartition(":")
    if not sep or not host:
        raise ContractViolation(f"listen address must be host:port, got {listen!r}")
    try:
        port_num = int(port)
    except ValueError:
        raise ContractViolation(f"listen port must be an integer, got {port!r}") from None
    if not 1 <= port_num <= 65535:
        raise ContractViolation(f"listen port must be in 1..65535, got {port_num}")
    return host, port_num


def serve(listen: str, model_path, window_size: int = DEFAULT_WINDOW_SIZE,
          max_seq_len: Optional[int] = None, log_path=None) -> None:
    """Run the service until interrupted. Model problems abort startup."""
    import uvicorn

    host, port = parse_listen_address(listen)
    engine = ClassificationEngine.from_file(model_path, max_seq_len=max_seq_len)
    if not 1 <= window_size <= engine.config.max_seq_len:
        raise ContractViolation(
            f"window_size must be in [1, max_seq_len={engine.config.max_seq_len}], "
            f"got {window_size}")
    log = SessionLog(log_path) if log_path is not None else None
    app = create_app(engine, window_size=window_size, log=log)
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        if log is not None:
            log.close()
