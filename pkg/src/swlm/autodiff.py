"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

Forward ops build an implicit tape (parent links plus backward closures);
`backward` runs one topologically ordered sweep from a scalar loss. Double
precision is the default so finite-difference checks are meaningful.
"""
from __future__ import annotations

import zlib

import numpy as np

from .errors import NonFiniteError, ShapeError

DTYPE = np.float64


class Tensor:
    __slots__ = ("data", "grad", "parents", "bw", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad = None
        self.parents: tuple = ()
        self.bw = None
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul_scalar(_as_tensor(other), -1.0))

    def __neg__(self):
        return mul_scalar(self, -1.0)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, n: int):
        if n == 2:
            return mul(self, self)
        raise NotImplementedError("only square is supported")


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _out(data, op: str, parents, bw) -> Tensor:
    if not np.isfinite(data).all():
        raise NonFiniteError(f"non-finite result in op {op!r}")
    t = Tensor.__new__(Tensor)
    t.data = data
    t.grad = None
    t.requires_grad = any(p.requires_grad for p in parents)
    if t.requires_grad:
        t.parents = tuple(parents)
        t.bw = bw
    else:
        t.parents = ()
        t.bw = None
    return t


def _accum(t: Tensor, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data + b.data

    def bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.data.shape))

    return _out(data, "add", (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data * b.data

    def bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _out(data, "mul", (a, b), bw)


def mul_scalar(a: Tensor, s: float) -> Tensor:
    data = a.data * s

    def bw(g):
        if a.requires_grad:
            _accum(a, g * s)

    return _out(data, "mul_scalar", (a,), bw)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data @ b.data
    except ValueError as exc:
        raise ShapeError(f"matmul: {a.data.shape} @ {b.data.shape}") from exc

    def bw(g):
        if a.requires_grad:
            ga = g @ np.swapaxes(b.data, -1, -2)
            _accum(a, _unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = np.swapaxes(a.data, -1, -2) @ g
            _accum(b, _unbroadcast(gb, b.data.shape))

    return _out(data, "matmul", (a, b), bw)


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)

    def bw(g):
        if a.requires_grad:
            _accum(a, g * (1.0 - data * data))

    return _out(data, "tanh", (a,), bw)


def sigmoid(a: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-a.data))

    def bw(g):
        if a.requires_grad:
            _accum(a, g * data * (1.0 - data))

    return _out(data, "sigmoid", (a,), bw)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis if axis >= 0 else g.ndim + axis] = slice(start, stop)
                _accum(t, g[tuple(idx)])

    return _out(data, "concat", tuple(tensors), bw)


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    idx = [slice(None)] * a.data.ndim
    ax = axis if axis >= 0 else a.data.ndim + axis
    idx[ax] = slice(start, start + length)
    idx = tuple(idx)
    data = a.data[idx]

    def bw(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[idx] = g
            _accum(a, full)

    return _out(data, "narrow", (a,), bw)


def reshape(a: Tensor, shape) -> Tensor:
    data = a.data.reshape(shape)

    def bw(g):
        if a.requires_grad:
            _accum(a, g.reshape(a.data.shape))

    return _out(data, "reshape", (a,), bw)


def rows(a: Tensor, idx) -> Tensor:
    """Gather along axis 0; backward scatter-adds into the source."""
    idx = np.asarray(idx, dtype=np.int64)
    data = a.data[idx]

    def bw(g):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            np.add.at(a.grad, idx, g)

    return _out(data, "rows", (a,), bw)


def amax(a: Tensor, axis: int) -> Tensor:
    """Max over one axis; gradient routes to the first maximal element."""
    data = a.data.max(axis=axis)
    arg = np.expand_dims(a.data.argmax(axis=axis), axis)

    def bw(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.put_along_axis(full, arg, np.expand_dims(g, axis), axis)
            _accum(a, full)

    return _out(data, "amax", (a,), bw)


def tsum(a: Tensor, axis=None) -> Tensor:
    data = a.data.sum(axis=axis)

    def bw(g):
        if a.requires_grad:
            if axis is None:
                _accum(a, np.broadcast_to(g, a.data.shape).copy())
            else:
                _accum(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())

    return _out(data, "sum", (a,), bw)


def dropout(a: Tensor, p: float, rng: np.random.Generator, train: bool) -> Tensor:
    """Inverted dropout: scales retained entries by 1/(1-p) at train time."""
    if not train or p == 0.0:
        return a
    if not 0.0 <= p < 1.0:
        raise ValueError("dropout p must be in [0, 1)")
    mask = (rng.random(a.data.shape) >= p) / (1.0 - p)
    data = a.data * mask

    def bw(g):
        if a.requires_grad:
            _accum(a, g * mask)

    return _out(data, "dropout", (a,), bw)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        if a.requires_grad:
            dot = (g * data).sum(axis=axis, keepdims=True)
            _accum(a, (g - dot) * data)

    return _out(data, "softmax", (a,), bw)


def log_softmax_values(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax_cross_entropy(logits: Tensor, targets, weights=None) -> Tensor:
    """Summed negative log likelihood of integer targets under row softmaxes.

    logits: (N, V); targets: (N,) ints; optional weights: (N,) multipliers.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.data.ndim != 2 or targets.shape != (logits.data.shape[0],):
        raise ShapeError(f"cross entropy: logits {logits.data.shape}, targets {targets.shape}")
    logp = log_softmax_values(logits.data)
    nll = -logp[np.arange(len(targets)), targets]
    if weights is not None:
        weights = np.asarray(weights, dtype=DTYPE)
        nll = nll * weights
    data = np.asarray(nll.sum())

    def bw(g):
        if logits.requires_grad:
            probs = np.exp(logp)
            grad = probs.copy()
            grad[np.arange(len(targets)), targets] -= 1.0
            if weights is not None:
                grad *= weights[:, None]
            _accum(logits, grad * g)

    return _out(data, "softmax_cross_entropy", (logits,), bw)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(node) into .grad for every reachable node."""
    if loss.data.size != 1:
        raise ShapeError("backward requires a scalar loss")
    topo: list[Tensor] = []
    seen = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    _accum(loss, np.ones_like(loss.data))
    for node in reversed(topo):
        if node.bw is not None:
            node.bw(node.grad)


class ParameterStore:
    """Named trainable tensors with per-name seeded uniform initialization.

    Each parameter draws from its own RNG stream keyed by (seed, name), so the
    initialization is stable under registration-order changes.
    """

    def __init__(self, seed: int, init_range: float = 0.1):
        self.seed = seed
        self.init_range = init_range
        self.params: dict[str, Tensor] = {}

    def create(self, name: str, shape, init: str = "uniform") -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter name: {name}")
        rng = np.random.default_rng([self.seed, zlib.crc32(name.encode("utf-8"))])
        if init == "uniform":
            data = rng.uniform(-self.init_range, self.init_range, shape)
        elif init == "zeros":
            data = np.zeros(shape)
        else:
            raise ValueError(f"unknown init: {init!r}")
        t = Tensor(data, requires_grad=True)
        self.params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> list[str]:
        return sorted(self.params)

    def tensors(self) -> list[Tensor]:
        return [self.params[n] for n in self.names()]

    def zero_grads(self) -> None:
        for t in self.params.values():
            t.grad = None

    def sgd_step(self, lr: float) -> None:
        for t in self.params.values():
            if t.grad is not None:
                t.data -= lr * t.grad

    def snapshot(self) -> dict[str, np.ndarray]:
        return {n: t.data.copy() for n, t in self.params.items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        for n, data in snap.items():
            self.params[n].data[...] = data

    def zero_all(self) -> None:
        for t in self.params.values():
            t.data[...] = 0.0


def grad_check(f, store: ParameterStore, eps: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences.

    f must be a deterministic nullary function returning a scalar Tensor.
    """
    store.zero_grads()
    loss = f()
    backward(loss)
    analytic = {
        n: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for n, t in store.params.items()
    }
    worst = 0.0
    for name, t in store.params.items():
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = f().item()
            flat[i] = orig - eps
            down = f().item()
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            a = analytic[name].reshape(-1)[i]
            err = abs(a - numeric) / max(1e-12, abs(a) + abs(numeric))
            worst = max(worst, err)
    return worst
