"""Masked stacked-LSTM classifier: topology, forward pass, and model files.

The network is input(132) -> LSTM(64) -> LSTM(64) -> dense softmax. Padding
frames are mask-skipped: every layer's recurrent state passes through a
padded time step unchanged, so tail padding can never change the logits.

Packed gate order in all kernels and biases is [i, f, g, o] (input, forget,
cell candidate, output); the model file header records this tag.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .landmarks import (
    CLASS_REGISTRY,
    ExerciseLabel,
    PoseSequence,
    label_from_index,
)

GATE_ORDER = "ifgo"
MODEL_FORMAT_VERSION = 1


class ContractViolation(ValueError):
    """Arguments inconsistent with the model configuration."""


class ModelFileError(ValueError):
    """Model file rejected at load time; the message names the bad field."""


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int = 132
    lstm_units: tuple[int, ...] = (64, 64)
    num_classes: int = 4
    max_seq_len: int = 32
    pad_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lstm_units", tuple(int(u) for u in self.lstm_units))
        if self.input_dim < 1:
            raise ContractViolation(f"input_dim must be >= 1, got {self.input_dim}")
        if len(self.lstm_units) == 0 or any(u < 1 for u in self.lstm_units):
            raise ContractViolation(f"lstm_units must be non-empty and all >= 1, got {self.lstm_units}")
        if self.num_classes < 2:
            raise ContractViolation(f"num_classes must be >= 2, got {self.num_classes}")
        if self.max_seq_len < 1:
            raise ContractViolation(f"max_seq_len must be >= 1, got {self.max_seq_len}")

    def layer_input_dims(self) -> list[int]:
        return [self.input_dim] + list(self.lstm_units[:-1])


@dataclass
class LstmLayerParams:
    W: np.ndarray  # (4u, d) input kernel
    U: np.ndarray  # (4u, u) recurrent kernel
    b: np.ndarray  # (4u,)

    @property
    def units(self) -> int:
        return self.U.shape[1]


@dataclass
class ModelParams:
    """All trainable tensors. Also reused as the gradient container."""

    layers: list[LstmLayerParams]
    dense_w: np.ndarray  # (k, u_last)
    dense_b: np.ndarray  # (k,)

    @property
    def dtype(self):
        return self.dense_w.dtype

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        """All tensors with their canonical names, in serialization order."""
        out = []
        for i, layer in enumerate(self.layers):
            out.append((f"lstm{i}.W", layer.W))
            out.append((f"lstm{i}.U", layer.U))
            out.append((f"lstm{i}.b", layer.b))
        out.append(("dense.W", self.dense_w))
        out.append(("dense.b", self.dense_b))
        return out

    def num_scalars(self) -> int:
        return sum(arr.size for _, arr in self.arrays())

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(
            layers=[LstmLayerParams(l.W.astype(dtype), l.U.astype(dtype), l.b.astype(dtype))
                    for l in self.layers],
            dense_w=self.dense_w.astype(dtype),
            dense_b=self.dense_b.astype(dtype),
        )

    def copy(self) -> "ModelParams":
        return self.astype(self.dtype)

    def zeros_like(self) -> "ModelParams":
        return ModelParams(
            layers=[LstmLayerParams(np.zeros_like(l.W), np.zeros_like(l.U), np.zeros_like(l.b))
                    for l in self.layers],
            dense_w=np.zeros_like(self.dense_w),
            dense_b=np.zeros_like(self.dense_b),
        )


@dataclass(frozen=True)
class ClassProbabilities:
    probs: np.ndarray
    argmax_label: ExerciseLabel


def param_count(config: ModelConfig) -> int:
    """Closed-form count of trainable scalars for the configured topology."""
    total = 0
    for d, u in zip(config.layer_input_dims(), config.lstm_units):
        total += 4 * (u * (d + u) + u)
    total += config.lstm_units[-1] * config.num_classes + config.num_classes
    return total


def init_params(config: ModelConfig, seed: int, dtype=np.float32) -> ModelParams:
    """Deterministic initialization.

    Kernels are uniform in +-sqrt(6 / (fan_in + fan_out)) where fans are taken
    from the packed tensor: W (4u, d) has fan_in=d, fan_out=4u; U (4u, u) has
    fan_in=u, fan_out=4u; dense (k, u) has fan_in=u, fan_out=k. Biases start
    at zero except the forget-gate slice, which starts at 1.0.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for d, u in zip(config.layer_input_dims(), config.lstm_units):
        bound_w = np.sqrt(6.0 / (d + 4 * u))
        bound_u = np.sqrt(6.0 / (u + 4 * u))
        W = rng.uniform(-bound_w, bound_w, size=(4 * u, d)).astype(dtype)
        U = rng.uniform(-bound_u, bound_u, size=(4 * u, u)).astype(dtype)
        b = np.zeros(4 * u, dtype=dtype)
        b[u:2 * u] = 1.0  # forget gate
        layers.append(LstmLayerParams(W, U, b))
    u_last, k = config.lstm_units[-1], config.num_classes
    bound_d = np.sqrt(6.0 / (u_last + k))
    dense_w = rng.uniform(-bound_d, bound_d, size=(k, u_last)).astype(dtype)
    dense_b = np.zeros(k, dtype=dtype)
    params = ModelParams(layers=layers, dense_w=dense_w, dense_b=dense_b)
    assert params.num_scalars() == param_count(config)
    return params


def validate_params(params: ModelParams, config: ModelConfig) -> None:
    dims = config.layer_input_dims()
    if len(params.layers) != len(config.lstm_units):
        raise ContractViolation(
            f"params have {len(params.layers)} LSTM layers, config wants {len(config.lstm_units)}"
        )
    for i, (layer, d, u) in enumerate(zip(params.layers, dims, config.lstm_units)):
        for name, arr, shape in (("W", layer.W, (4 * u, d)), ("U", layer.U, (4 * u, u)),
                                 ("b", layer.b, (4 * u,))):
            if arr.shape != shape:
                raise ContractViolation(f"lstm{i}.{name}: expected shape {shape}, got {arr.shape}")
    k, u_last = config.num_classes, config.lstm_units[-1]
    if params.dense_w.shape != (k, u_last):
        raise ContractViolation(f"dense.W: expected shape {(k, u_last)}, got {params.dense_w.shape}")
    if params.dense_b.shape != (k,):
        raise ContractViolation(f"dense.b: expected shape {(k,)}, got {params.dense_b.shape}")


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function, elementwise."""
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def split_gates(z: np.ndarray, u: int):
    """Split a (..., 4u) pre-activation into activated i, f, g, o slices."""
    i = sigmoid(z[..., 0 * u:1 * u])
    f = sigmoid(z[..., 1 * u:2 * u])
    g = np.tanh(z[..., 2 * u:3 * u])
    o = sigmoid(z[..., 3 * u:4 * u])
    return i, f, g, o


def lstm_cell_step(x: np.ndarray, h: np.ndarray, c: np.ndarray, layer: LstmLayerParams,
                   recurrent_mask: Optional[np.ndarray] = None):
    """One LSTM cell update on vectors; returns (h', c').

    ``recurrent_mask`` (training only) multiplies h before the recurrent
    kernels of all four gates.
    """
    u = layer.units
    x = np.asarray(x)
    if x.shape != (layer.W.shape[1],) or h.shape != (u,) or c.shape != (u,):
        raise ContractViolation(
            f"lstm_cell_step shapes: x{x.shape} h{h.shape} c{c.shape} vs "
            f"W{layer.W.shape} U{layer.U.shape}"
        )
    hhat = h * recurrent_mask if recurrent_mask is not None else h
    z = layer.W @ x + layer.U @ hhat + layer.b
    i, f, g, o = split_gates(z, u)
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, c_new


def forward_batch(x: np.ndarray, step_mask: np.ndarray, params: ModelParams,
                  dropout_masks: Optional[list[np.ndarray]] = None) -> np.ndarray:
    """Run the stack over a batch; returns logits (B, k).

    x: (B, T, d); step_mask: (B, T) with 1.0 at real frames and 0.0 at
    padding. At a padded step every layer's (h, c) is carried through
    unchanged, which keeps tail padding bit-neutral. ``dropout_masks`` is one
    (B, u) recurrent-dropout mask per layer (training mode only).
    """
    dtype = params.dtype
    B, T, _ = x.shape
    mask = step_mask.astype(dtype)
    inputs = x
    h = None
    for li, layer in enumerate(params.layers):
        u = layer.units
        h = np.zeros((B, u), dtype=dtype)
        c = np.zeros((B, u), dtype=dtype)
        rec_mask = dropout_masks[li] if dropout_masks is not None else None
        outputs = np.empty((B, T, u), dtype=dtype)
        Wt, Ut = layer.W.T, layer.U.T
        for t in range(T):
            hhat = h * rec_mask if rec_mask is not None else h
            z = inputs[:, t] @ Wt + hhat @ Ut + layer.b
            i, f, g, o = split_gates(z, u)
            c_new = f * c + i * g
            h_new = o * np.tanh(c_new)
            m = mask[:, t:t + 1]
            c = m * c_new + (1.0 - m) * c
            h = m * h_new + (1.0 - m) * h
            outputs[:, t] = h
        inputs = outputs
    return h @ params.dense_w.T + params.dense_b


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    logits = np.asarray(logits)
    if not np.isfinite(logits).all():
        raise ContractViolation("softmax requires finite logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(sequence: PoseSequence, params: ModelParams, config: ModelConfig,
            mode: str = "infer", dropout_masks: Optional[list[np.ndarray]] = None,
            class_names: Optional[Sequence[str]] = None):
    """Classify one sequence; returns (ClassProbabilities, logits).

    ``mode="infer"`` never applies dropout. The sequence normally has
    config.max_seq_len frames; longer or shorter inputs are accepted and
    iterated in full (masking keeps extra tail padding inert).
    """
    if mode not in ("train", "infer"):
        raise ContractViolation(f"mode must be 'train' or 'infer', got {mode!r}")
    if mode == "infer" and dropout_masks is not None:
        raise ContractViolation("dropout_masks are only valid in train mode")
    validate_params(params, config)
    dtype = params.dtype
    x = sequence.features(config.pad_value, dtype=dtype)[np.newaxis]  # (1, T, d)
    if x.shape[2] != config.input_dim:
        raise ContractViolation(f"sequence features have dim {x.shape[2]}, config wants {config.input_dim}")
    step_mask = sequence.step_mask()[np.newaxis]
    masks = None
    if dropout_masks is not None:
        masks = [m.reshape(1, -1).astype(dtype) for m in dropout_masks]
    logits = forward_batch(x, step_mask, params, dropout_masks=masks)[0]
    probs = softmax(logits.astype(np.float64)).astype(dtype)
    names = tuple(class_names) if class_names is not None else (
        CLASS_REGISTRY if config.num_classes == len(CLASS_REGISTRY)
        else tuple(f"class_{i}" for i in range(config.num_classes)))
    label = label_from_index(int(np.argmax(probs)), names)
    return ClassProbabilities(probs=probs, argmax_label=label), logits


# ---------------------------------------------------------------------------
# Model file: one JSON header line, then raw little-endian float32 tensors in
# the arrays() order. The header carries the config, class registry, gate
# order tag, a tensor manifest, and a SHA-256 checksum of the payload.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoadedModel:
    params: ModelParams
    config: ModelConfig
    class_names: tuple[str, ...]


def save_model(params: ModelParams, config: ModelConfig, path,
               class_names: Sequence[str] = CLASS_REGISTRY) -> None:
    """Write the binary model container. Parameters are stored as float32."""
    validate_params(params, config)
    if len(class_names) != config.num_classes:
        raise ContractViolation(
            f"class_names has {len(class_names)} entries, config.num_classes is {config.num_classes}"
        )
    stored = params.astype(np.float32)
    payload = b"".join(np.ascontiguousarray(arr, dtype="<f4").tobytes()
                       for _, arr in stored.arrays())
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "gate_order": GATE_ORDER,
        "config": {
            "input_dim": config.input_dim,
            "lstm_units": list(config.lstm_units),
            "num_classes": config.num_classes,
            "max_seq_len": config.max_seq_len,
            "pad_value": float(np.float32(config.pad_value)),
        },
        "class_registry": list(class_names),
        "tensors": [{"name": name, "shape": list(arr.shape)} for name, arr in stored.arrays()],
        "dtype": "<f4",
        "checksum_sha256": hashlib.sha256(payload).hexdigest(),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def load_model(path) -> LoadedModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.find(b"\n")
    if nl < 0:
        raise ModelFileError("header: missing newline terminator")
    try:
        header = json.loads(blob[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFileError(f"header: not valid JSON ({e})") from None

    version = header.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFileError(f"format_version: got {version!r}, expected {MODEL_FORMAT_VERSION}")
    if header.get("gate_order") != GATE_ORDER:
        raise ModelFileError(f"gate_order: got {header.get('gate_order')!r}, expected {GATE_ORDER!r}")
    if header.get("dtype") != "<f4":
        raise ModelFileError(f"dtype: got {header.get('dtype')!r}, expected '<f4'")

    try:
        cfg = header["config"]
        config = ModelConfig(
            input_dim=int(cfg["input_dim"]),
            lstm_units=tuple(int(u) for u in cfg["lstm_units"]),
            num_classes=int(cfg["num_classes"]),
            max_seq_len=int(cfg["max_seq_len"]),
            pad_value=float(cfg["pad_value"]),
        )
    except (KeyError, TypeError, ValueError, ContractViolation) as e:
        raise ModelFileError(f"config: {e}") from None

    class_names = tuple(header.get("class_registry", ()))
    if len(class_names) != config.num_classes:
        raise ModelFileError(
            f"class_registry: {len(class_names)} names for {config.num_classes} classes"
        )

    expected_shapes = []
    dims = config.layer_input_dims()
    for i, (d, u) in enumerate(zip(dims, config.lstm_units)):
        expected_shapes += [(f"lstm{i}.W", (4 * u, d)), (f"lstm{i}.U", (4 * u, u)),
                            (f"lstm{i}.b", (4 * u,))]
    expected_shapes += [("dense.W", (config.num_classes, config.lstm_units[-1])),
                        ("dense.b", (config.num_classes,))]

    manifest = header.get("tensors")
    if not isinstance(manifest, list) or len(manifest) != len(expected_shapes):
        raise ModelFileError(
            f"tensors: manifest has {len(manifest) if isinstance(manifest, list) else 'no'} "
            f"entries, config requires {len(expected_shapes)}"
        )
    for entry, (name, shape) in zip(manifest, expected_shapes):
        if entry.get("name") != name or tuple(entry.get("shape", ())) != shape:
            raise ModelFileError(
                f"tensor {name!r}: header declares {entry.get('name')!r} with shape "
                f"{entry.get('shape')}, config requires {list(shape)}"
            )

    payload = blob[nl + 1:]
    expected_bytes = sum(int(np.prod(shape)) for _, shape in expected_shapes) * 4
    if len(payload) != expected_bytes:
        raise ModelFileError(
            f"checksum: payload is {len(payload)} bytes, expected {expected_bytes} (file truncated?)"
        )
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header.get("checksum_sha256"):
        raise ModelFileError(
            f"checksum_sha256: payload digest {digest} does not match header "
            f"{header.get('checksum_sha256')}"
        )

    offset = 0
    tensors = {}
    for name, shape in expected_shapes:
        n = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f4", count=n, offset=offset).reshape(shape)
        tensors[name] = arr.astype(np.float32)  # own, writeable copy
        offset += n * 4

    layers = [LstmLayerParams(tensors[f"lstm{i}.W"], tensors[f"lstm{i}.U"], tensors[f"lstm{i}.b"])
              for i in range(len(config.lstm_units))]
    params = ModelParams(layers=layers, dense_w=tensors["dense.W"], dense_b=tensors["dense.b"])
    return LoadedModel(params=params, config=config, class_names=class_names)
