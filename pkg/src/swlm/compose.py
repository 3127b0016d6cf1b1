"""Composition functions mapping a word's subword units to one fixed-width vector.

Variants: plain word lookup, additive composition, bidirectional LSTM
composition, and the character CNN with a highway layer.
"""
from __future__ import annotations

import numpy as np

from .autodiff import (
    ParameterStore,
    Tensor,
    amax,
    concat,
    dropout,
    narrow,
    reshape,
    rows,
    sigmoid,
    tanh,
    tsum,
)
from .errors import CharAdditionForbidden
from .nn import lstm_init, masked_lstm_run, pad_segs

PAD_UNIT_ID = 0
UNK_UNIT_ID = 1


class LookupComposer:
    """Closed-vocabulary word embedding lookup; units are whole words."""

    kind = "lookup"

    def __init__(self, store: ParameterStore, n_units: int, dim: int):
        self.dim = dim
        self.emb = store.create("compose.emb", (n_units, dim))

    def compose(self, segs, train=False, rng=None) -> Tensor:
        ids = np.array([s[0] for s in segs], dtype=np.int64)
        return rows(self.emb, ids)


class AdditionComposer:
    """Word vector as the exact sum of its subword unit vectors."""

    kind = "addition"

    def __init__(self, store: ParameterStore, n_units: int, dim: int):
        self.dim = dim
        self.emb = store.create("compose.emb", (n_units, dim))

    def compose(self, segs, train=False, rng=None) -> Tensor:
        ids, mask = pad_segs(segs)
        n, length = ids.shape
        e = rows(self.emb, ids.reshape(-1))
        e = reshape(e, (n, length, self.dim))
        masked = e * Tensor(mask[:, :, None])
        return tsum(masked, axis=1)


class BiRNNComposer:
    """Forward and backward LSTM final states, linearly mixed into one vector."""

    kind = "birnn"

    def __init__(self, store: ParameterStore, n_units: int, unit_dim: int, hidden: int,
                 out_dim: int, dropout_p: float = 0.0):
        self.dim = out_dim
        self.hidden = hidden
        self.dropout_p = dropout_p
        self.emb = store.create("compose.emb", (n_units, unit_dim))
        self.fw = lstm_init(store, "compose.fw", unit_dim, hidden)
        self.bw = lstm_init(store, "compose.bw", unit_dim, hidden)
        self.Wf = store.create("compose.Wf", (hidden, out_dim))
        self.Wb = store.create("compose.Wb", (hidden, out_dim))
        self.b = store.create("compose.b", (out_dim,))

    def compose(self, segs, train=False, rng=None) -> Tensor:
        ids, mask = pad_segs(segs)
        rev_ids = np.full_like(ids, PAD_UNIT_ID)
        for r, s in enumerate(segs):
            rev_ids[r, : len(s)] = s[::-1]
        h_fw = masked_lstm_run(ids, mask, self.emb, *self.fw, self.hidden)
        h_bw = masked_lstm_run(rev_ids, mask, self.emb, *self.bw, self.hidden)
        if train and self.dropout_p > 0.0:
            h_fw = dropout(h_fw, self.dropout_p, rng, train)
            h_bw = dropout(h_bw, self.dropout_p, rng, train)
        return h_fw @ self.Wf + h_bw @ self.Wb + self.b


class ConvHighwayComposer:
    """Character CNN: per-width filters, max-over-time, one highway layer, projection."""

    kind = "conv-highway"

    def __init__(self, store: ParameterStore, n_units: int, char_dim: int, out_dim: int,
                 widths=(1, 2, 3, 4, 5, 6), filters_per_width: int = 25):
        self.dim = out_dim
        self.char_dim = char_dim
        self.widths = tuple(widths)
        self.n_filters = [filters_per_width * w for w in self.widths]
        total = sum(self.n_filters)
        self.emb = store.create("compose.emb", (n_units, char_dim))
        # padding row starts at zero but stays trainable
        self.emb.data[PAD_UNIT_ID] = 0.0
        self.filters = []
        for w, nf in zip(self.widths, self.n_filters):
            F = store.create(f"compose.conv{w}.F", (w * char_dim, nf))
            fb = store.create(f"compose.conv{w}.b", (nf,))
            self.filters.append((w, nf, F, fb))
        self.Wh = store.create("compose.hw.Wh", (total, total))
        self.bh = store.create("compose.hw.bh", (total,))
        self.Wt = store.create("compose.hw.Wt", (total, total))
        self.bt = store.create("compose.hw.bt", (total,))
        self.Wp = store.create("compose.proj.W", (total, out_dim))
        self.bp = store.create("compose.proj.b", (out_dim,))

    def compose(self, segs, train=False, rng=None) -> Tensor:
        ids, _ = pad_segs(segs, min_len=max(self.widths))
        n, k = ids.shape
        e = reshape(rows(self.emb, ids.reshape(-1)), (n, k, self.char_dim))
        pooled = []
        for w, nf, F, fb in self.filters:
            windows = concat([narrow(e, 1, off, k - w + 1) for off in range(w)], axis=2)
            fmap = tanh(windows @ F + fb)  # (n, k-w+1, nf)
            pooled.append(amax(fmap, axis=1))
        y = concat(pooled, axis=1)
        t = sigmoid(y @ self.Wt + self.bt)
        h = tanh(y @ self.Wh + self.bh)
        z = t * h + (Tensor(1.0) - t) * y
        return z @ self.Wp + self.bp


def make_composer(kind: str, unit: str, store: ParameterStore, n_units: int, config):
    """Instantiate a composer, enforcing the unit/composer compatibility rules."""
    if kind == "lookup":
        return LookupComposer(store, n_units, config.dim)
    if kind == "addition":
        if unit == "char":
            raise CharAdditionForbidden(
                "additive composition over single characters collapses distinct words"
            )
        return AdditionComposer(store, n_units, config.dim)
    if kind == "birnn":
        hidden = config.birnn_hidden or config.dim
        return BiRNNComposer(store, n_units, config.dim, hidden, config.dim,
                             dropout_p=config.dropout)
    if kind == "conv-highway":
        if unit != "char":
            raise ValueError("conv-highway composition requires character units")
        return ConvHighwayComposer(store, n_units, config.char_dim, config.dim,
                                   widths=config.conv_widths,
                                   filters_per_width=config.conv_filters_per_width)
    raise ValueError(f"unknown composer kind: {kind!r}")
