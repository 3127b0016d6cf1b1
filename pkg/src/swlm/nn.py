"""Shared recurrent-cell machinery built on the autodiff primitives."""
from __future__ import annotations

import numpy as np

from .autodiff import ParameterStore, Tensor, narrow, rows, sigmoid, tanh


def lstm_init(store: ParameterStore, prefix: str, in_dim: int, hidden: int):
    Wx = store.create(f"{prefix}.Wx", (in_dim, 4 * hidden))
    Wh = store.create(f"{prefix}.Wh", (hidden, 4 * hidden))
    b = store.create(f"{prefix}.b", (4 * hidden,))
    return Wx, Wh, b


def lstm_step(x, h, c, Wx, Wh, b, hidden: int):
    """One LSTM step; gate layout along the preactivation is [input, forget, cell, output]."""
    z = x @ Wx + h @ Wh + b
    i = sigmoid(narrow(z, 1, 0, hidden))
    f = sigmoid(narrow(z, 1, hidden, hidden))
    g = tanh(narrow(z, 1, 2 * hidden, hidden))
    o = sigmoid(narrow(z, 1, 3 * hidden, hidden))
    c_new = f * c + i * g
    h_new = o * tanh(c_new)
    return h_new, c_new


def zero_state(n: int, hidden: int):
    return Tensor(np.zeros((n, hidden))), Tensor(np.zeros((n, hidden)))


def masked_lstm_run(ids: np.ndarray, mask: np.ndarray, emb, Wx, Wh, b, hidden: int):
    """Run an LSTM over padded unit-id rows, freezing state where mask is 0.

    Returns the hidden state at each row's true final position.
    """
    n, length = ids.shape
    h, c = zero_state(n, hidden)
    for j in range(length):
        x = rows(emb, ids[:, j])
        h_new, c_new = lstm_step(x, h, c, Wx, Wh, b, hidden)
        col = mask[:, j]
        if col.all():
            h, c = h_new, c_new
        else:
            m = Tensor(col[:, None])
            keep = Tensor(1.0 - col[:, None])
            h = m * h_new + keep * h
            c = m * c_new + keep * c
    return h


def pad_segs(segs: list, pad_id: int = 0, min_len: int = 1):
    """Right-pad unit-id lists into an (N, L) id matrix plus a float mask."""
    n = len(segs)
    length = max(min_len, max(len(s) for s in segs))
    ids = np.full((n, length), pad_id, dtype=np.int64)
    mask = np.zeros((n, length))
    for r, s in enumerate(segs):
        ids[r, : len(s)] = s
        mask[r, : len(s)] = 1.0
    return ids, mask
