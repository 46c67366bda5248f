"""Training: cross-entropy loss, full BPTT gradients, RMSProp, and the loop.

Gradients are computed analytically through the mask-skip recurrence and the
recurrent-dropout scaling; padded time steps contribute exactly zero. A
central finite-difference oracle is provided for verification in 64-bit mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .landmarks import ExerciseLabel, PoseSequence
from .model import (
    ClassProbabilities,
    ContractViolation,
    LstmLayerParams,
    ModelConfig,
    ModelParams,
    forward,
    init_params,
    softmax,
    split_gates,
    validate_params,
)


class ConfigurationError(ValueError):
    """Training setup that cannot run (e.g. a class with no examples)."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 50
    learning_rate: float = 1e-4
    rmsprop_rho: float = 0.9
    rmsprop_epsilon: float = 1e-7
    recurrent_dropout: float = 0.3
    val_fraction: float = 0.2
    seed: int = 0
    shuffle_each_epoch: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.recurrent_dropout < 1.0:
            raise ConfigurationError(
                f"recurrent_dropout must be in [0, 1), got {self.recurrent_dropout}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigurationError(f"val_fraction must be in [0, 1), got {self.val_fraction}")


@dataclass
class OptimizerState:
    """One nonnegative moving-average accumulator per parameter scalar."""

    accumulators: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "OptimizerState":
        return cls(accumulators=[np.zeros_like(arr) for _, arr in params.arrays()], step=0)


@dataclass(frozen=True)
class EpochRecord:
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


def cross_entropy(probs, target) -> float:
    """Categorical cross-entropy: -ln(probability assigned to the target)."""
    vec = probs.probs if isinstance(probs, ClassProbabilities) else np.asarray(probs)
    idx = target.index if isinstance(target, ExerciseLabel) else int(target)
    return float(-math.log(float(vec[idx])))


def cross_entropy_from_logits(logits: np.ndarray, target_idx: int) -> float:
    """Fused softmax + cross-entropy: logsumexp(z) - z[target], stable."""
    z = np.asarray(logits, dtype=np.float64)
    m = z.max()
    return float(m + math.log(np.exp(z - m).sum()) - z[target_idx])


def sample_dropout_masks(rng: np.random.Generator, batch_size: int, units: Sequence[int],
                         rate: float, dtype=np.float32) -> list[np.ndarray]:
    """One inverted-scaling Bernoulli(1-rate) mask per layer per sequence.

    The mask multiplies h entering the recurrent kernels of all four gates
    and is reused at every time step of the sequence.
    """
    keep = 1.0 - rate
    return [((rng.random((batch_size, u)) < keep) / keep).astype(dtype) for u in units]


def _forward_cached(x: np.ndarray, step_mask: np.ndarray, params: ModelParams,
                    dropout_masks: Optional[list[np.ndarray]]):
    """Forward over a batch keeping everything the backward pass needs."""
    dtype = params.dtype
    B, T, _ = x.shape
    mask = step_mask.astype(dtype)
    layer_caches = []
    inputs = x
    h = None
    for li, layer in enumerate(params.layers):
        u = layer.units
        h = np.zeros((B, u), dtype=dtype)
        c = np.zeros((B, u), dtype=dtype)
        rec = dropout_masks[li] if dropout_masks is not None else None
        Wt, Ut = layer.W.T, layer.U.T
        cache = {
            "inputs": inputs,
            "hhat": np.empty((B, T, u), dtype=dtype),
            "i": np.empty((B, T, u), dtype=dtype),
            "f": np.empty((B, T, u), dtype=dtype),
            "g": np.empty((B, T, u), dtype=dtype),
            "o": np.empty((B, T, u), dtype=dtype),
            "tanh_c_new": np.empty((B, T, u), dtype=dtype),
            "c_prev": np.empty((B, T, u), dtype=dtype),
            "rec": rec,
        }
        outputs = np.empty((B, T, u), dtype=dtype)
        for t in range(T):
            hhat = h * rec if rec is not None else h
            z = inputs[:, t] @ Wt + hhat @ Ut + layer.b
            i, f, g, o = split_gates(z, u)
            cache["hhat"][:, t] = hhat
            cache["i"][:, t] = i
            cache["f"][:, t] = f
            cache["g"][:, t] = g
            cache["o"][:, t] = o
            cache["c_prev"][:, t] = c
            c_new = f * c + i * g
            tanh_c_new = np.tanh(c_new)
            cache["tanh_c_new"][:, t] = tanh_c_new
            h_new = o * tanh_c_new
            m = mask[:, t:t + 1]
            c = m * c_new + (1.0 - m) * c
            h = m * h_new + (1.0 - m) * h
            outputs[:, t] = h
        cache["outputs"] = outputs
        layer_caches.append(cache)
        inputs = outputs
    logits = h @ params.dense_w.T + params.dense_b
    return logits, layer_caches, mask


def _backward(dlogits: np.ndarray, params: ModelParams, layer_caches: list[dict],
              mask: np.ndarray) -> ModelParams:
    """BPTT for the whole stack; returns gradients shaped like the params."""
    B, T = mask.shape
    grads = params.zeros_like()
    h_final = layer_caches[-1]["outputs"][:, T - 1]
    grads.dense_w[...] = dlogits.T @ h_final
    grads.dense_b[...] = dlogits.sum(axis=0)

    # Gradient w.r.t. each layer's output sequence; only the final step of the
    # top layer receives signal from the dense head.
    dout = np.zeros_like(layer_caches[-1]["outputs"])
    dout[:, T - 1] = dlogits @ params.dense_w

    for li in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[li]
        cache = layer_caches[li]
        glayer = grads.layers[li]
        u = layer.units
        rec = cache["rec"]
        inputs = cache["inputs"]
        dx = np.zeros_like(inputs)
        dh_next = np.zeros((B, u), dtype=inputs.dtype)
        dc_next = np.zeros((B, u), dtype=inputs.dtype)
        for t in range(T - 1, -1, -1):
            m = mask[:, t:t + 1]
            dh = dout[:, t] + dh_next
            dc = dc_next
            dh_new = m * dh
            dc_new = m * dc
            i = cache["i"][:, t]
            f = cache["f"][:, t]
            g = cache["g"][:, t]
            o = cache["o"][:, t]
            tanh_c_new = cache["tanh_c_new"][:, t]
            c_prev = cache["c_prev"][:, t]

            do = dh_new * tanh_c_new
            dc_new = dc_new + dh_new * o * (1.0 - tanh_c_new * tanh_c_new)
            di = dc_new * g
            df = dc_new * c_prev
            dg = dc_new * i
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ], axis=1)

            glayer.W += dz.T @ inputs[:, t]
            glayer.U += dz.T @ cache["hhat"][:, t]
            glayer.b += dz.sum(axis=0)
            dx[:, t] = dz @ layer.W

            dhhat = dz @ layer.U
            if rec is not None:
                dhhat = dhhat * rec
            dh_next = dhhat + (1.0 - m) * dh
            dc_next = dc_new * f + (1.0 - m) * dc
        dout = dx
    return grads


def _batch_tensors(batch: Sequence[PoseSequence], config: ModelConfig, dtype):
    lengths = {len(s) for s in batch}
    if len(lengths) != 1:
        raise ContractViolation(f"batch sequences must share one length, got {sorted(lengths)}")
    x = np.stack([s.features(config.pad_value, dtype=dtype) for s in batch])
    step_mask = np.stack([s.step_mask() for s in batch])
    return x, step_mask


def batch_loss_arrays(x: np.ndarray, step_mask: np.ndarray, y: np.ndarray,
                      params: ModelParams,
                      dropout_masks: Optional[list[np.ndarray]] = None) -> float:
    """Mean cross-entropy of a raw (B, T, d) batch; the finite-difference
    oracle perturbs params and calls this."""
    logits, _, _ = _forward_cached(x, step_mask, params, dropout_masks)
    return float(np.mean([cross_entropy_from_logits(logits[n], int(y[n]))
                          for n in range(len(y))]))


def compute_gradients_arrays(x: np.ndarray, step_mask: np.ndarray, y: np.ndarray,
                             params: ModelParams,
                             dropout_masks: Optional[list[np.ndarray]] = None):
    """Array-level gradient core; returns (grads, batch_loss, batch_acc).

    x: (B, T, d) features, step_mask: (B, T) 1.0/0.0, y: (B,) class indices.
    The loss is the mean over the batch, so padded steps contribute zero
    gradient and gradients w.r.t. padding features are zero.
    """
    B = x.shape[0]
    logits, caches, mask = _forward_cached(x, step_mask, params, dropout_masks)

    probs = softmax(logits.astype(np.float64))
    losses = [cross_entropy_from_logits(logits[n], int(y[n])) for n in range(B)]
    loss = float(np.mean(losses))
    acc = float(np.mean(np.argmax(logits, axis=1) == y))

    dlogits = probs.copy()
    dlogits[np.arange(B), y] -= 1.0
    dlogits = (dlogits / B).astype(params.dtype)

    grads = _backward(dlogits, params, caches, mask)
    return grads, loss, acc


def compute_gradients(batch: Sequence[PoseSequence], params: ModelParams, config: ModelConfig,
                      recurrent_dropout: float = 0.0, rng: Optional[np.random.Generator] = None,
                      dropout_masks: Optional[list[np.ndarray]] = None):
    """Gradients of the mean batch loss; returns (grads, batch_loss, batch_acc).

    Recurrent-dropout masks are sampled once per sequence per layer from
    ``rng`` and reused at every time step; pass ``dropout_masks`` to pin them
    (verification).
    """
    if len(batch) == 0:
        raise ContractViolation("empty batch")
    if any(s.label is None for s in batch):
        raise ContractViolation("every sequence in a training batch needs a label")
    validate_params(params, config)
    dtype = params.dtype
    x, step_mask = _batch_tensors(batch, config, dtype)
    y = np.array([s.label.index for s in batch])

    if dropout_masks is None and recurrent_dropout > 0.0:
        if rng is None:
            raise ContractViolation("recurrent_dropout > 0 requires an rng")
        dropout_masks = sample_dropout_masks(rng, len(batch), config.lstm_units,
                                             recurrent_dropout, dtype)

    return compute_gradients_arrays(x, step_mask, y, params, dropout_masks)


def finite_diff_grad(loss_fn: Callable[[ModelParams], float], params: ModelParams,
                     h: float = 1e-5) -> ModelParams:
    """Central-difference gradient oracle: (L(t+h) - L(t-h)) / 2h per scalar.

    Meant for 64-bit params; perturbs in place and restores each scalar.
    """
    grads = params.zeros_like()
    for (_, theta), (_, g) in zip(params.arrays(), grads.arrays()):
        flat_t = theta.reshape(-1)
        flat_g = g.reshape(-1)
        for j in range(flat_t.size):
            orig = flat_t[j]
            flat_t[j] = orig + h
            lp = loss_fn(params)
            flat_t[j] = orig - h
            lm = loss_fn(params)
            flat_t[j] = orig
            flat_g[j] = (lp - lm) / (2.0 * h)
    return grads


def rmsprop_step(params: ModelParams, grads: ModelParams, state: OptimizerState,
                 lr: float, rho: float, epsilon: float):
    """Plain RMSProp (no momentum, no centering); returns (params, state).

    Per scalar: s <- rho*s + (1-rho)*g^2; theta <- theta - lr*g/(sqrt(s)+eps).
    """
    new_arrays = []
    new_acc = []
    for (_, theta), (_, g), s in zip(params.arrays(), grads.arrays(), state.accumulators):
        s_new = rho * s + (1.0 - rho) * g * g
        new_arrays.append(theta - lr * g / (np.sqrt(s_new) + epsilon))
        new_acc.append(s_new)
    it = iter(new_arrays)
    layers = [LstmLayerParams(next(it), next(it), next(it)) for _ in params.layers]
    new_params = ModelParams(layers=layers, dense_w=next(it), dense_b=next(it))
    return new_params, OptimizerState(accumulators=new_acc, step=state.step + 1)


def stratified_split(labels: Sequence[int], num_classes: int, val_fraction: float,
                     rng: np.random.Generator):
    """Per-class shuffled split; returns (train_indices, val_indices).

    Validation takes round(n_c * val_fraction) per class, always leaving at
    least one training example per class.
    """
    train_idx: list[int] = []
    val_idx: list[int] = []
    for c in range(num_classes):
        members = [i for i, y in enumerate(labels) if y == c]
        if not members:
            raise ConfigurationError(f"class {c} has zero examples")
        members = [members[j] for j in rng.permutation(len(members))]
        n_val = min(int(round(len(members) * val_fraction)), len(members) - 1)
        val_idx.extend(members[:n_val])
        train_idx.extend(members[n_val:])
    return train_idx, val_idx


def _infer_metrics(sequences: Sequence[PoseSequence], params: ModelParams,
                   config: ModelConfig):
    """Infer-mode loss and accuracy, one sequence at a time."""
    losses = []
    correct = 0
    for seq in sequences:
        _, logits = forward(seq, params, config, mode="infer")
        losses.append(cross_entropy_from_logits(logits, seq.label.index))
        if int(np.argmax(logits)) == seq.label.index:
            correct += 1
    if not sequences:
        return math.nan, math.nan
    return float(np.mean(losses)), correct / len(sequences)


def train(sequences: Sequence[PoseSequence], model_config: ModelConfig,
          train_config: TrainConfig,
          progress: Optional[Callable[[int, EpochRecord], None]] = None):
    """Full training run; returns (ModelParams, TrainHistory).

    Deterministic given (sequences, configs, seed): the seed drives parameter
    init, the stratified split, epoch shuffling, and dropout sampling.
    """
    if any(s.label is None for s in sequences):
        raise ConfigurationError("all training sequences must be labeled")
    labels = [s.label.index for s in sequences]
    rng = np.random.default_rng(train_config.seed)
    params = init_params(model_config, train_config.seed)
    state = OptimizerState.for_params(params)

    train_idx, val_idx = stratified_split(labels, model_config.num_classes,
                                          train_config.val_fraction, rng)
    train_set = [sequences[i] for i in train_idx]
    val_set = [sequences[i] for i in val_idx]

    history = TrainHistory()
    for epoch in range(train_config.epochs):
        if train_config.shuffle_each_epoch:
            order = rng.permutation(len(train_set))
        else:
            order = np.arange(len(train_set))
        epoch_loss = 0.0
        epoch_correct = 0.0
        for start in range(0, len(order), train_config.batch_size):
            batch = [train_set[i] for i in order[start:start + train_config.batch_size]]
            grads, loss, acc = compute_gradients(
                batch, params, model_config,
                recurrent_dropout=train_config.recurrent_dropout, rng=rng)
            params, state = rmsprop_step(params, grads, state, train_config.learning_rate,
                                         train_config.rmsprop_rho, train_config.rmsprop_epsilon)
            epoch_loss += loss * len(batch)
            epoch_correct += acc * len(batch)
        val_loss, val_acc = _infer_metrics(val_set, params, model_config)
        record = EpochRecord(
            train_loss=epoch_loss / len(train_set),
            train_acc=epoch_correct / len(train_set),
            val_loss=val_loss,
            val_acc=val_acc,
        )
        history.records.append(record)
        if progress is not None:
            progress(epoch, record)
    return params, history
