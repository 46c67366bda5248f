"""Body-landmark data model: frames, sequences, padding, and the on-disk format.

A frame is 33 landmark points with (x, y, z, visibility) each, flattening to a
132-wide feature vector. Frames with any non-finite value are demoted to
padding frames; padding is tracked by an explicit flag, never inferred from
the stored values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

NUM_POINTS = 33
POINT_FEATURES = 4
FRAME_FEATURES = NUM_POINTS * POINT_FEATURES  # 132

DEFAULT_PAD_VALUE = 0.0

# Fixed class registry; index order is persisted in every file this package writes.
CLASS_REGISTRY: tuple[str, ...] = (
    "BodyWeightSquats",
    "Lunges",
    "PushUps",
    "ThrowingDiscus",
)

LANDMARK_FORMAT_VERSION = 1


class MalformedInputError(ValueError):
    """Raw landmark data with the wrong arity or structure."""


class LandmarkFileError(ValueError):
    """Landmark-sequence file that violates the format, with record context."""


@dataclass(frozen=True)
class LandmarkPoint:
    """One tracked body point: hip-relative normalized coords plus visibility."""

    x: float
    y: float
    z: float
    visibility: float


@dataclass(frozen=True)
class ExerciseLabel:
    index: int
    name: str


def label_from_name(name: str, class_names: Sequence[str] = CLASS_REGISTRY) -> ExerciseLabel:
    try:
        return ExerciseLabel(index=class_names.index(name), name=name)
    except ValueError:
        raise MalformedInputError(f"unknown label name {name!r}; known: {list(class_names)}") from None


def label_from_index(index: int, class_names: Sequence[str] = CLASS_REGISTRY) -> ExerciseLabel:
    if not 0 <= index < len(class_names):
        raise MalformedInputError(f"label index {index} out of range [0, {len(class_names)})")
    return ExerciseLabel(index=index, name=class_names[index])


class LandmarkFrame:
    """One time step: either 33 real landmark points or a padding frame.

    Values are stored as a (33, 4) float32 array in [x, y, z, visibility]
    point order; a padding frame carries no values of its own.
    """

    __slots__ = ("_values", "is_padding")

    def __init__(self, values: Optional[np.ndarray], is_padding: bool) -> None:
        if is_padding:
            self._values = None
        else:
            arr = np.asarray(values, dtype=np.float32)
            if arr.shape != (NUM_POINTS, POINT_FEATURES):
                raise MalformedInputError(
                    f"frame must be {NUM_POINTS}x{POINT_FEATURES} values, got shape {arr.shape}"
                )
            self._values = arr
        self.is_padding = is_padding

    @classmethod
    def from_values(cls, values: np.ndarray) -> "LandmarkFrame":
        return cls(values, is_padding=False)

    @classmethod
    def padding(cls) -> "LandmarkFrame":
        return cls(None, is_padding=True)

    @property
    def values(self) -> Optional[np.ndarray]:
        return self._values

    @property
    def points(self) -> list[LandmarkPoint]:
        if self.is_padding:
            raise MalformedInputError("padding frame has no points")
        return [LandmarkPoint(*map(float, row)) for row in self._values]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LandmarkFrame):
            return NotImplemented
        if self.is_padding or other.is_padding:
            return self.is_padding == other.is_padding
        return np.array_equal(self._values, other._values, equal_nan=True)

    def __repr__(self) -> str:
        return "LandmarkFrame(padding)" if self.is_padding else "LandmarkFrame(33 points)"


def flatten_frame(frame: LandmarkFrame, pad_value: float = DEFAULT_PAD_VALUE) -> np.ndarray:
    """Flatten a frame to its 132-wide feature vector.

    Layout is [x0, y0, z0, v0, x1, y1, z1, v1, ...]; a padding frame yields
    132 copies of ``pad_value``.
    """
    if frame.is_padding:
        return np.full(FRAME_FEATURES, pad_value, dtype=np.float32)
    return frame.values.reshape(FRAME_FEATURES).copy()


def sanitize_frame(raw) -> LandmarkFrame:
    """Turn raw 33x4 values into a frame, demoting non-finite input to padding.

    Accepts an existing LandmarkFrame as well (idempotent): padding stays
    padding, real frames are re-checked.
    """
    if isinstance(raw, LandmarkFrame):
        if raw.is_padding:
            return raw
        raw = raw.values
    arr = np.asarray(raw, dtype=np.float32)
    if arr.shape != (NUM_POINTS, POINT_FEATURES):
        raise MalformedInputError(
            f"expected {NUM_POINTS}x{POINT_FEATURES} landmark values, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        return LandmarkFrame.padding()
    return LandmarkFrame.from_values(arr)


@dataclass(frozen=True)
class PoseSequence:
    """Ordered landmark frames with an optional label.

    ``real_len`` counts the non-padding frames. Sequences produced by
    ``pad_or_truncate`` have exactly ``max_seq_len`` frames with all padding
    in the tail; the serving window may legitimately interleave padding.
    """

    frames: tuple[LandmarkFrame, ...]
    label: Optional[ExerciseLabel] = None
    real_len: int = field(default=-1)

    def __post_init__(self):
        if self.real_len < 0:
            object.__setattr__(self, "real_len", sum(1 for f in self.frames if not f.is_padding))

    def __len__(self) -> int:
        return len(self.frames)

    def features(self, pad_value: float = DEFAULT_PAD_VALUE, dtype=np.float32) -> np.ndarray:
        """(T, 132) feature matrix in the frame order."""
        out = np.empty((len(self.frames), FRAME_FEATURES), dtype=dtype)
        for i, frame in enumerate(self.frames):
            out[i] = flatten_frame(frame, pad_value)
        return out

    def step_mask(self) -> np.ndarray:
        """(T,) mask: 1.0 at real frames, 0.0 at padding frames."""
        return np.array([0.0 if f.is_padding else 1.0 for f in self.frames], dtype=np.float64)

    def with_label(self, label: Optional[ExerciseLabel]) -> "PoseSequence":
        return PoseSequence(frames=self.frames, label=label, real_len=self.real_len)


def pad_or_truncate(frames: Sequence[LandmarkFrame], max_seq_len: int,
                    label: Optional[ExerciseLabel] = None) -> PoseSequence:
    """Pad with tail padding frames, or keep only the most recent frames.

    Truncation keeps the LAST ``max_seq_len`` frames, matching the serving
    window's most-recent-frames rule.
    """
    if max_seq_len < 1:
        raise MalformedInputError(f"max_seq_len must be >= 1, got {max_seq_len}")
    if len(frames) == 0:
        raise MalformedInputError("cannot pad an empty frame list")
    if len(frames) > max_seq_len:
        kept = tuple(frames[len(frames) - max_seq_len:])
    else:
        kept = tuple(frames) + tuple(LandmarkFrame.padding() for _ in range(max_seq_len - len(frames)))
    return PoseSequence(frames=kept, label=label)


# ---------------------------------------------------------------------------
# Landmark-sequence file format (newline-delimited JSON records)
#
# Line 1 is the header: {"format_version": 1, "fps": <optional>,
# "class_registry": [...]}. Every further line is one sequence:
# {"sequence_id": str, "label": str|null, "frames": [[[x,y,z,v] x33] x T]}.
# Numbers are 32-bit floats written in shortest round-trip decimal form;
# non-finite values are written as the string "NaN".
# ---------------------------------------------------------------------------


@dataclass
class LandmarkRecord:
    """One stored sequence: raw (T, 33, 4) float32 values, possibly with NaNs."""

    sequence_id: str
    label: Optional[str]
    frames: np.ndarray

    def to_sequence(self, max_seq_len: int, class_names: Sequence[str] = CLASS_REGISTRY) -> PoseSequence:
        """Sanitize every frame and pad/truncate to the model length."""
        frames = [sanitize_frame(self.frames[t]) for t in range(self.frames.shape[0])]
        label = label_from_name(self.label, class_names) if self.label is not None else None
        return pad_or_truncate(frames, max_seq_len, label=label)


@dataclass
class LandmarkDataset:
    records: list[LandmarkRecord]
    class_registry: tuple[str, ...] = CLASS_REGISTRY
    fps: Optional[float] = None

    def __len__(self) -> int:
        return len(self.records)

    def to_sequences(self, max_seq_len: int) -> list[PoseSequence]:
        return [r.to_sequence(max_seq_len, self.class_registry) for r in self.records]


def _encode_value(v: float):
    # float32 -> float64 is exact, so Python's shortest repr round-trips the
    # 32-bit value bit-for-bit; non-finite values become the "NaN" literal.
    f = float(np.float32(v))
    if math.isfinite(f):
        return f
    return "NaN"


def _decode_value(v, where: str) -> float:
    if isinstance(v, str):
        if v == "NaN":
            return math.nan
        raise LandmarkFileError(f'{where}: non-numeric value {v!r} (only "NaN" is allowed)')
    if isinstance(v, (int, float)):
        return float(v)
    raise LandmarkFileError(f"{where}: expected a number, got {type(v).__name__}")


def save_landmark_file(path, dataset: LandmarkDataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format_version": LANDMARK_FORMAT_VERSION,
                  "class_registry": list(dataset.class_registry)}
        if dataset.fps is not None:
            header["fps"] = _encode_value(dataset.fps)
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for rec in dataset.records:
            frames = np.asarray(rec.frames, dtype=np.float32)
            if frames.ndim != 3 or frames.shape[1:] != (NUM_POINTS, POINT_FEATURES):
                raise LandmarkFileError(
                    f"record {rec.sequence_id!r}: frames must be (T, {NUM_POINTS}, {POINT_FEATURES}), "
                    f"got {frames.shape}"
                )
            body = {
                "sequence_id": rec.sequence_id,
                "label": rec.label,
                "frames": [[[_encode_value(v) for v in pt] for pt in frame] for frame in frames],
            }
            fh.write(json.dumps(body, separators=(",", ":")) + "\n")


def load_landmark_file(path) -> LandmarkDataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise LandmarkFileError(f"{path}: empty file, missing header record")

    def parse_line(i: int):
        try:
            return json.loads(lines[i])
        except json.JSONDecodeError as e:
            raise LandmarkFileError(f"{path}:{i + 1}: invalid JSON: {e}") from None

    header = parse_line(0)
    if not isinstance(header, dict) or "format_version" not in header:
        raise LandmarkFileError(f"{path}:1: header record missing 'format_version'")
    if header["format_version"] != LANDMARK_FORMAT_VERSION:
        raise LandmarkFileError(
            f"{path}:1: unsupported format_version {header['format_version']} "
            f"(expected {LANDMARK_FORMAT_VERSION})"
        )
    registry = tuple(header.get("class_registry", CLASS_REGISTRY))
    fps = header.get("fps")
    fps = float(fps) if fps is not None else None

    records = []
    for i in range(1, len(lines)):
        if not lines[i].strip():
            continue
        obj = parse_line(i)
        where = f"{path}:{i + 1}"
        if not isinstance(obj, dict) or "sequence_id" not in obj or "frames" not in obj:
            raise LandmarkFileError(f"{where}: sequence record needs 'sequence_id' and 'frames'")
        label = obj.get("label")
        if label is not None:
            if not isinstance(label, str):
                raise LandmarkFileError(f"{where}: label must be a string or null")
            if label not in registry:
                raise LandmarkFileError(f"{where}: unknown label name {label!r}; registry: {list(registry)}")
        raw_frames = obj["frames"]
        if not isinstance(raw_frames, list) or len(raw_frames) == 0:
            raise LandmarkFileError(f"{where}: 'frames' must be a non-empty array")
        frames = np.empty((len(raw_frames), NUM_POINTS, POINT_FEATURES), dtype=np.float32)
        for t, frame in enumerate(raw_frames):
            if not isinstance(frame, list) or len(frame) != NUM_POINTS:
                raise LandmarkFileError(
                    f"{where}: frame {t} must have exactly {NUM_POINTS} points, "
                    f"got {len(frame) if isinstance(frame, list) else type(frame).__name__}"
                )
            for p, pt in enumerate(frame):
                if not isinstance(pt, list) or len(pt) != POINT_FEATURES:
                    raise LandmarkFileError(
                        f"{where}: frame {t} point {p} must have {POINT_FEATURES} values"
                    )
                for k in range(POINT_FEATURES):
                    frames[t, p, k] = _decode_value(pt[k], f"{where}: frame {t} point {p}")
        records.append(LandmarkRecord(sequence_id=str(obj["sequence_id"]), label=label, frames=frames))
    return LandmarkDataset(records=records, class_registry=registry, fps=fps)
