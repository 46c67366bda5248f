"""Synthetic body-landmark sequences for four exercise motion patterns.

Each class animates a canonical 33-point skeleton. Squats and lunges share
one kinematic template (vertical drop plus alternating foot split) drawn
from identical depth, cadence and phase distributions; what separates them
is the traversal direction of the drop/split cycle (descent leading the
stance shift, or the stance shift leading the descent). Reversing a closed
trajectory leaves every per-frame statistic in place, so the pair can only
be told apart by reading frames in order. Push-ups use a prone body axis,
discus throws a rotating torso with extended arms.

Every sequence is generated from its own seed derived from
(spec.seed, class index, sequence index), so the dataset does not depend
on generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .landmarks import (
    CLASS_REGISTRY,
    NUM_POINTS,
    LandmarkDataset,
    LandmarkRecord,
)

# Point indices of the 33-point body layout used throughout.
NOSE = 0
LEFT_EYE_INNER, LEFT_EYE, LEFT_EYE_OUTER = 1, 2, 3
RIGHT_EYE_INNER, RIGHT_EYE, RIGHT_EYE_OUTER = 4, 5, 6
LEFT_EAR, RIGHT_EAR = 7, 8
MOUTH_LEFT, MOUTH_RIGHT = 9, 10
LEFT_SHOULDER, RIGHT_SHOULDER = 11, 12
LEFT_ELBOW, RIGHT_ELBOW = 13, 14
LEFT_WRIST, RIGHT_WRIST = 15, 16
LEFT_PINKY, RIGHT_PINKY = 17, 18
LEFT_INDEX, RIGHT_INDEX = 19, 20
LEFT_THUMB, RIGHT_THUMB = 21, 22
LEFT_HIP, RIGHT_HIP = 23, 24
LEFT_KNEE, RIGHT_KNEE = 25, 26
LEFT_ANKLE, RIGHT_ANKLE = 27, 28
LEFT_HEEL, RIGHT_HEEL = 29, 30
LEFT_FOOT_INDEX, RIGHT_FOOT_INDEX = 31, 32

_HEAD = [NOSE, LEFT_EYE_INNER, LEFT_EYE, LEFT_EYE_OUTER, RIGHT_EYE_INNER,
         RIGHT_EYE, RIGHT_EYE_OUTER, LEFT_EAR, RIGHT_EAR, MOUTH_LEFT, MOUTH_RIGHT]
_ARMS = [LEFT_ELBOW, RIGHT_ELBOW, LEFT_WRIST, RIGHT_WRIST, LEFT_PINKY, RIGHT_PINKY,
         LEFT_INDEX, RIGHT_INDEX, LEFT_THUMB, RIGHT_THUMB]
_UPPER = _HEAD + [LEFT_SHOULDER, RIGHT_SHOULDER] + _ARMS
_LEFT_LEG = [LEFT_KNEE, LEFT_ANKLE, LEFT_HEEL, LEFT_FOOT_INDEX]
_RIGHT_LEG = [RIGHT_KNEE, RIGHT_ANKLE, RIGHT_HEEL, RIGHT_FOOT_INDEX]
_LEFT_HAND = [LEFT_WRIST, LEFT_PINKY, LEFT_INDEX, LEFT_THUMB]
_RIGHT_HAND = [RIGHT_WRIST, RIGHT_PINKY, RIGHT_INDEX, RIGHT_THUMB]


# Cadence band (cycles per sequence) for each class, in registry order. The
# squat and lunge bands are identical on purpose: any cadence difference
# shows up in unordered frame statistics (sampling density along the motion
# cycle), so those two classes are separated by the phase-warp direction
# instead, which only frame order can reveal. Bands stay >= 1 cycle so every
# oscillating channel sweeps its whole range in every sequence.
DEFAULT_CYCLES: tuple[tuple[float, float], ...] = (
    (1.2, 2.2),   # BodyWeightSquats
    (1.2, 2.2),   # Lunges
    (1.5, 3.0),   # PushUps
    (1.0, 2.2),   # ThrowingDiscus
)

# Foot-split amplitude ranges for the squat/lunge template. They overlap over
# most of their mass: the non-overlapping tails give training an early
# foothold, while a frame-shuffled model is left guessing for the ~70% of
# sequences whose amplitude is ambiguous, keeping the class pair temporal.
SQUAT_SPLIT = (0.24, 0.56)
LUNGE_SPLIT = (0.34, 0.66)

# Phase-warp skew, shared by both drop/split classes: the motion dwells near
# the bottom of the cycle and moves quickly through the top. Kept moderate
# so no part of the cycle starves for frames.
DROP_SKEW = (0.35, 0.65)

# Lead/lag of the foot split relative to the quarter-cycle offset from the
# drop. Kept well away from +-pi/2, where the drop/split loop would collapse
# to a line and lose its traversal direction. The band must also stay
# disjoint from pi minus itself: a reversed sequence with lag d replays
# forward as one with lag pi - d, so overlap there would let one class
# exactly impersonate the other.
SPLIT_LAG = (-0.4, 0.4)


@dataclass(frozen=True)
class SynthSpec:
    """Generation parameters. ``counts`` is one int for all classes or a
    per-class tuple; sequence length is drawn uniformly from
    [min_len, max_len]; ``dropout_prob`` is the chance a frame is lost
    entirely (all-NaN, sanitized into padding downstream)."""

    counts: int | tuple[int, ...] = 120
    min_len: int = 32
    max_len: int = 32
    noise_sigma: float = 0.015
    dropout_prob: float = 0.02
    cycles: tuple[tuple[float, float], ...] = DEFAULT_CYCLES
    fps: float = 24.0
    seed: int = 0

    def __post_init__(self):
        if any(c < 0 for c in self.per_class_counts()):
            raise ValueError(f"counts must be >= 0, got {self.counts}")
        if not 8 <= self.min_len <= self.max_len:
            raise ValueError(
                f"need 8 <= min_len <= max_len, got {self.min_len}..{self.max_len}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ValueError("dropout_prob must be in [0, 1)")
        if len(self.cycles) != len(CLASS_REGISTRY):
            raise ValueError(f"cycles needs one (lo, hi) band per class, "
                             f"got {len(self.cycles)}")
        if any(not 0 < lo <= hi for lo, hi in self.cycles):
            raise ValueError(f"each cycles band needs 0 < lo <= hi, got {self.cycles}")

    def per_class_counts(self) -> tuple[int, ...]:
        if isinstance(self.counts, int):
            return (self.counts,) * len(CLASS_REGISTRY)
        if len(self.counts) != len(CLASS_REGISTRY):
            raise ValueError(f"counts needs {len(CLASS_REGISTRY)} entries, "
                             f"got {len(self.counts)}")
        return tuple(int(c) for c in self.counts)


def _standing_base() -> np.ndarray:
    """Upright skeleton, normalized image coordinates, y grows downward."""
    base = np.zeros((NUM_POINTS, 3))

    def put(indices, x, y, z=0.0):
        for sign_idx, idx in enumerate(np.atleast_1d(indices)):
            base[idx] = (x if sign_idx == 0 else -x, y, z)

    base[NOSE] = (0.0, -0.62, -0.02)
    for idx, x in ((LEFT_EYE_INNER, 0.02), (LEFT_EYE, 0.04), (LEFT_EYE_OUTER, 0.06)):
        base[idx] = (x, -0.66, -0.02)
        base[idx + 3] = (-x, -0.66, -0.02)
    put([LEFT_EAR, RIGHT_EAR], 0.08, -0.64)
    put([MOUTH_LEFT, MOUTH_RIGHT], 0.03, -0.58)
    put([LEFT_SHOULDER, RIGHT_SHOULDER], 0.17, -0.46)
    put([LEFT_ELBOW, RIGHT_ELBOW], 0.23, -0.24)
    put([LEFT_WRIST, RIGHT_WRIST], 0.26, -0.04)
    put([LEFT_PINKY, RIGHT_PINKY], 0.29, 0.02)
    put([LEFT_INDEX, RIGHT_INDEX], 0.30, 0.01)
    put([LEFT_THUMB, RIGHT_THUMB], 0.27, 0.00)
    put([LEFT_HIP, RIGHT_HIP], 0.10, 0.0)
    put([LEFT_KNEE, RIGHT_KNEE], 0.11, 0.42)
    put([LEFT_ANKLE, RIGHT_ANKLE], 0.12, 0.84)
    put([LEFT_HEEL, RIGHT_HEEL], 0.12, 0.88, -0.03)
    put([LEFT_FOOT_INDEX, RIGHT_FOOT_INDEX], 0.13, 0.90, 0.08)
    return base


def _prone_base() -> np.ndarray:
    """Plank skeleton: body axis along x, left/right split along z."""
    base = np.zeros((NUM_POINTS, 3))
    for idx in _HEAD:
        base[idx] = (-0.70, 0.18, 0.0)
    base[NOSE] = (-0.72, 0.20, 0.0)
    base[LEFT_SHOULDER] = (-0.55, 0.22, 0.14)
    base[RIGHT_SHOULDER] = (-0.55, 0.22, -0.14)
    base[LEFT_ELBOW] = (-0.55, 0.30, 0.20)
    base[RIGHT_ELBOW] = (-0.55, 0.30, -0.20)
    for idx in _LEFT_HAND:
        base[idx] = (-0.54, 0.36, 0.16)
    for idx in _RIGHT_HAND:
        base[idx] = (-0.54, 0.36, -0.16)
    base[LEFT_HIP] = (0.05, 0.24, 0.09)
    base[RIGHT_HIP] = (0.05, 0.24, -0.09)
    base[LEFT_KNEE] = (0.40, 0.28, 0.09)
    base[RIGHT_KNEE] = (0.40, 0.28, -0.09)
    base[LEFT_ANKLE] = (0.72, 0.31, 0.09)
    base[RIGHT_ANKLE] = (0.72, 0.31, -0.09)
    base[LEFT_HEEL] = (0.76, 0.29, 0.09)
    base[RIGHT_HEEL] = (0.76, 0.29, -0.09)
    base[LEFT_FOOT_INDEX] = (0.74, 0.36, 0.09)
    base[RIGHT_FOOT_INDEX] = (0.74, 0.36, -0.09)
    return base


def _drop_split_frames(rng: np.random.Generator, num_frames: int,
                       cycles_lo: float, cycles_hi: float,
                       split_range: tuple[float, float],
                       direction: float) -> np.ndarray:
    """Vertical drop plus alternating foot split over a standing base.

    Shared by the squat and lunge classes. Depth, cadence, skew and phases
    come from identical distributions for both, and the split amplitude
    ranges mostly overlap, so the two classes trace the same closed loop in
    pose space with the same dwell profile; ``direction`` decides which way
    the loop is traversed, a cue that survives only in frame order.
    """
    base = _standing_base()
    depth = rng.uniform(0.45, 0.70)
    split_amp = rng.uniform(*split_range)
    cycles = rng.uniform(cycles_lo, cycles_hi)
    skew = rng.uniform(*DROP_SKEW)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    split_lag = rng.uniform(*SPLIT_LAG)

    frames = np.empty((num_frames, NUM_POINTS, 3))
    for t in range(num_frames):
        ang = phase + direction * (2.0 * math.pi * cycles * t / num_frames)
        warped = ang + skew * math.sin(ang)
        drop = depth * (0.5 - 0.5 * math.cos(warped))
        split = split_amp * math.sin(warped + split_lag)
        coords = base.copy()
        coords[_UPPER + [LEFT_HIP, RIGHT_HIP], 1] += drop
        coords[[LEFT_KNEE, RIGHT_KNEE], 1] += drop * 0.55
        coords[[LEFT_KNEE, RIGHT_KNEE], 2] += drop * 0.5
        coords[[LEFT_HIP, RIGHT_HIP], 2] -= drop * 0.15
        coords[_ARMS, 1] -= drop * 0.6
        coords[_LEFT_LEG, 2] += split
        coords[_RIGHT_LEG, 2] -= split
        coords[LEFT_HIP, 2] += split * 0.3
        coords[RIGHT_HIP, 2] -= split * 0.3
        # Arms counter-balance the stance shift.
        coords[[LEFT_ELBOW] + _LEFT_HAND, 2] -= split * 0.5
        coords[[RIGHT_ELBOW] + _RIGHT_HAND, 2] += split * 0.5
        frames[t] = coords
    return frames


def _pushup_frames(rng: np.random.Generator, num_frames: int,
                   cycles_lo: float, cycles_hi: float) -> np.ndarray:
    """Prone press: upper body sinks toward the ground and pushes back up."""
    base = _prone_base()
    amp = rng.uniform(0.10, 0.20)
    cycles = rng.uniform(cycles_lo, cycles_hi)
    phase = rng.uniform(0.0, 2.0 * math.pi)

    frames = np.empty((num_frames, NUM_POINTS, 3))
    upper = _HEAD + [LEFT_SHOULDER, RIGHT_SHOULDER]
    for t in range(num_frames):
        ang = 2.0 * math.pi * cycles * t / num_frames + phase
        press = amp * (0.5 - 0.5 * math.cos(ang))
        coords = base.copy()
        coords[upper, 1] += press
        coords[[LEFT_HIP, RIGHT_HIP], 1] += press * 0.5
        coords[LEFT_ELBOW, 2] += press * 0.8
        coords[RIGHT_ELBOW, 2] -= press * 0.8
        coords[[LEFT_ELBOW, RIGHT_ELBOW], 1] -= press * 0.3
        frames[t] = coords
    return frames


def _discus_frames(rng: np.random.Generator, num_frames: int,
                   cycles_lo: float, cycles_hi: float) -> np.ndarray:
    """Wind-up rotation: torso swings around the vertical axis, arms spread."""
    base = _standing_base()
    base[LEFT_ELBOW] = (0.35, -0.44, 0.0)
    base[RIGHT_ELBOW] = (-0.35, -0.44, 0.0)
    for idx, dx in ((LEFT_WRIST, 0.55), (LEFT_PINKY, 0.60), (LEFT_INDEX, 0.61),
                    (LEFT_THUMB, 0.58)):
        base[idx] = (dx, -0.42, 0.0)
        base[idx + 1] = (-dx - 0.06, -0.42, 0.0)
    swing = rng.uniform(0.7, 1.3)
    cycles = rng.uniform(cycles_lo, cycles_hi)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    bob_phase = rng.uniform(0.0, 2.0 * math.pi)

    def rotate_y(coords, indices, theta):
        c, s = math.cos(theta), math.sin(theta)
        x = coords[indices, 0].copy()
        z = coords[indices, 2].copy()
        coords[indices, 0] = c * x + s * z
        coords[indices, 2] = -s * x + c * z

    frames = np.empty((num_frames, NUM_POINTS, 3))
    legs = _LEFT_LEG + _RIGHT_LEG
    for t in range(num_frames):
        ang = 2.0 * math.pi * cycles * t / num_frames + phase
        theta = swing * math.sin(ang)
        coords = base.copy()
        rotate_y(coords, _UPPER, theta)
        rotate_y(coords, [LEFT_HIP, RIGHT_HIP], 0.6 * theta)
        rotate_y(coords, legs, 0.25 * theta)
        coords[:, 1] += 0.06 * math.sin(ang + bob_phase)
        frames[t] = coords
    return frames


def _squat_frames(rng, num_frames, cycles_lo, cycles_hi):
    # Descent leads, stance shift trails.
    return _drop_split_frames(rng, num_frames, cycles_lo, cycles_hi,
                              SQUAT_SPLIT, direction=-1.0)


def _lunge_frames(rng, num_frames, cycles_lo, cycles_hi):
    # The forward step comes first, the descent follows.
    return _drop_split_frames(rng, num_frames, cycles_lo, cycles_hi,
                              LUNGE_SPLIT, direction=1.0)


_PATTERNS = {
    "BodyWeightSquats": _squat_frames,
    "Lunges": _lunge_frames,
    "PushUps": _pushup_frames,
    "ThrowingDiscus": _discus_frames,
}


def _make_record(spec: SynthSpec, class_idx: int, seq_idx: int) -> LandmarkRecord:
    rng = np.random.default_rng([spec.seed, class_idx, seq_idx])
    name = CLASS_REGISTRY[class_idx]
    num_frames = int(rng.integers(spec.min_len, spec.max_len + 1))
    cycles_lo, cycles_hi = spec.cycles[class_idx]
    coords = _PATTERNS[name](rng, num_frames, cycles_lo, cycles_hi)
    coords = coords + rng.normal(0.0, spec.noise_sigma, coords.shape)

    frames = np.empty((num_frames, NUM_POINTS, 4), dtype=np.float32)
    frames[:, :, :3] = coords
    frame_vis = rng.uniform(0.7, 0.95, num_frames)
    jitter = rng.normal(0.0, 0.03, (num_frames, NUM_POINTS))
    frames[:, :, 3] = np.clip(frame_vis[:, None] + jitter, 0.0, 1.0)

    # Simulated detector dropouts: whole frame lost. The first frame is kept
    # so every sequence has at least one real frame.
    lost = rng.random(num_frames) < spec.dropout_prob
    lost[0] = False
    frames[lost] = np.nan

    return LandmarkRecord(
        sequence_id=f"{name.lower()}-{seq_idx:04d}",
        label=name,
        frames=frames,
    )


def generate(spec: SynthSpec) -> LandmarkDataset:
    """Build a labeled dataset with the per-class counts from the spec."""
    records = []
    for class_idx, count in enumerate(spec.per_class_counts()):
        for seq_idx in range(count):
            records.append(_make_record(spec, class_idx, seq_idx))
    return LandmarkDataset(records=records, class_registry=CLASS_REGISTRY,
                           fps=spec.fps)
