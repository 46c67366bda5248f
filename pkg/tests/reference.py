"""Independent reference implementations used as test oracles.

Everything here is deliberately written in the most literal style possible
(per-element loops, per-gate weight slices, if-based mask skipping) and in
64-bit floats, so that agreement with the production code is meaningful.
Nothing in this module imports from the package under test.
"""

from __future__ import annotations

import math

import numpy as np


def naive_sigmoid(v: float) -> float:
    return 1.0 / (1.0 + math.exp(-v))


def naive_cell(x, h, c, W, U, b):
    """One LSTM cell update on plain float64 vectors.

    W is (4u, d), U is (4u, u), b is (4u,), packed [i, f, g, o]. Every dot
    product is an explicit loop.
    """
    u = len(h)
    d = len(x)
    h_new = [0.0] * u
    c_new = [0.0] * u
    for j in range(u):
        pre = [0.0, 0.0, 0.0, 0.0]
        for gate in range(4):
            row = gate * u + j
            acc = float(b[row])
            for a in range(d):
                acc += float(W[row][a]) * float(x[a])
            for a in range(u):
                acc += float(U[row][a]) * float(h[a])
            pre[gate] = acc
        i = naive_sigmoid(pre[0])
        f = naive_sigmoid(pre[1])
        g = math.tanh(pre[2])
        o = naive_sigmoid(pre[3])
        c_new[j] = f * float(c[j]) + i * g
        h_new[j] = o * math.tanh(c_new[j])
    return h_new, c_new


def naive_forward_logits(x, step_mask, layer_weights, dense_w, dense_b):
    """Step-by-step stacked-LSTM forward for one sequence, 64-bit.

    x: (T, d) features; step_mask: (T,) with truthy entries at real frames.
    layer_weights: list of (W, U, b) tuples. Masked steps are skipped with an
    `if`, so they cannot touch the state at all. Returns logits as a list.
    """
    T = len(x)
    states = [([0.0] * (len(b) // 4), [0.0] * (len(b) // 4))
              for (_, _, b) in layer_weights]
    for t in range(T):
        if not step_mask[t]:
            continue
        inp = [float(v) for v in x[t]]
        for li, (W, U, b) in enumerate(layer_weights):
            h, c = states[li]
            h, c = naive_cell(inp, h, c, W, U, b)
            states[li] = (h, c)
            inp = h
    h_top = states[-1][0]
    k = len(dense_b)
    logits = []
    for r in range(k):
        acc = float(dense_b[r])
        for a in range(len(h_top)):
            acc += float(dense_w[r][a]) * h_top[a]
        logits.append(acc)
    return logits


def naive_softmax(logits):
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    s = sum(exps)
    return [e / s for e in exps]


def naive_cross_entropy_from_logits(logits, target_idx: int) -> float:
    return -math.log(naive_softmax(logits)[target_idx])


def naive_confusion(true_indices, pred_indices, k: int):
    """Dict-of-dicts tally, returned as a (k, k) int array."""
    table = {t: {p: 0 for p in range(k)} for t in range(k)}
    for t, p in zip(true_indices, pred_indices):
        table[t][p] += 1
    return np.array([[table[t][p] for p in range(k)] for t in range(k)], dtype=np.int64)


def unpack_params(params):
    """Pull raw float64 arrays out of a ModelParams without touching its API
    beyond attribute access, for feeding the naive evaluator."""
    layers = [(np.asarray(l.W, dtype=np.float64),
               np.asarray(l.U, dtype=np.float64),
               np.asarray(l.b, dtype=np.float64)) for l in params.layers]
    dense_w = np.asarray(params.dense_w, dtype=np.float64)
    dense_b = np.asarray(params.dense_b, dtype=np.float64)
    return layers, dense_w, dense_b
