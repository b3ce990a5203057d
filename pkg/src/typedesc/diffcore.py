"""Dense float64 tensors with reverse-mode differentiation.

A deliberately small engine: numpy holds the arrays, each op records its
parents and a backward closure, and `Tensor.backward()` walks the tape in
reverse topological order. Covers exactly the ops the two-stage generator
needs, plus a GRU cell, Adam, finite-difference gradient checking and a
binary checkpoint format. Correctness over speed throughout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CheckpointError, ShapeMismatch, TypedescError

_GRAD_ENABLED = True


class no_grad:
    """Disable graph construction while the context is active (inference mode)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    """Row-major float64 array with an optional same-shape gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backprop")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backprop = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def backward(self):
        """Accumulate gradients of this scalar into every reachable leaf."""
        if self.data.shape != ():
            raise TypedescError(f"backward needs a scalar root, got shape {self.data.shape}")
        order = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backprop is not None:
                node._backprop()

    def sum(self, axis=None):
        return reduce_sum(self, axis)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other) if isinstance(other, Tensor) else _scalar_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other) if isinstance(other, Tensor) else _scalar_add(self, -other)

    def __rsub__(self, other):
        return _scalar_sub_from(other, self)

    def __mul__(self, other):
        return mul(self, other) if isinstance(other, Tensor) else _scalar_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return _scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _toposort(root: Tensor) -> list[Tensor]:
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _make(data, parents, backprop) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backprop = backprop
    return out


def _accum(t: Tensor, g):
    if t.requires_grad:
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad += g


def _unbroadcast(g, shape):
    """Reduce a broadcast gradient back to the operand's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise and structural ops
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeMismatch(f"add: incompatible shapes {a.shape} and {b.shape}") from None
    out = _make(data, (a, b), None)

    def backprop():
        _accum(a, _unbroadcast(out.grad, a.data.shape))
        _accum(b, _unbroadcast(out.grad, b.data.shape))

    out._backprop = backprop if out.requires_grad else None
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data - b.data
    except ValueError:
        raise ShapeMismatch(f"sub: incompatible shapes {a.shape} and {b.shape}") from None
    out = _make(data, (a, b), None)

    def backprop():
        _accum(a, _unbroadcast(out.grad, a.data.shape))
        _accum(b, _unbroadcast(-out.grad, b.data.shape))

    out._backprop = backprop if out.requires_grad else None
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeMismatch(f"mul: incompatible shapes {a.shape} and {b.shape}") from None
    out = _make(data, (a, b), None)

    def backprop():
        _accum(a, _unbroadcast(out.grad * b.data, a.data.shape))
        _accum(b, _unbroadcast(out.grad * a.data, b.data.shape))

    out._backprop = backprop if out.requires_grad else None
    return out


def _scalar_add(a: Tensor, s) -> Tensor:
    s = float(s)
    out = _make(a.data + s, (a,), None)
    out._backprop = (lambda: _accum(a, out.grad)) if out.requires_grad else None
    return out


def _scalar_sub_from(s, a: Tensor) -> Tensor:
    s = float(s)
    out = _make(s - a.data, (a,), None)
    out._backprop = (lambda: _accum(a, -out.grad)) if out.requires_grad else None
    return out


def _scalar_mul(a: Tensor, s) -> Tensor:
    s = float(s)
    out = _make(a.data * s, (a,), None)
    out._backprop = (lambda: _accum(a, out.grad * s)) if out.requires_grad else None
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix/vector product for (2d,2d), (2d,1d) and (1d,2d) operands."""
    ad, bd = a.data, b.data
    if ad.ndim == 2 and bd.ndim == 2:
        if ad.shape[1] != bd.shape[0]:
            raise ShapeMismatch(f"matmul: incompatible shapes {a.shape} and {b.shape}")
        out = _make(ad @ bd, (a, b), None)

        def backprop():
            _accum(a, out.grad @ bd.T)
            _accum(b, ad.T @ out.grad)

    elif ad.ndim == 2 and bd.ndim == 1:
        if ad.shape[1] != bd.shape[0]:
            raise ShapeMismatch(f"matmul: incompatible shapes {a.shape} and {b.shape}")
        out = _make(ad @ bd, (a, b), None)

        def backprop():
            _accum(a, np.outer(out.grad, bd))
            _accum(b, ad.T @ out.grad)

    elif ad.ndim == 1 and bd.ndim == 2:
        if ad.shape[0] != bd.shape[0]:
            raise ShapeMismatch(f"matmul: incompatible shapes {a.shape} and {b.shape}")
        out = _make(ad @ bd, (a, b), None)

        def backprop():
            _accum(a, bd @ out.grad)
            _accum(b, np.outer(ad, out.grad))

    else:
        raise ShapeMismatch(f"matmul: unsupported ranks for shapes {a.shape} and {b.shape}")

    out._backprop = backprop if out.requires_grad else None
    return out


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeMismatch(f"transpose expects a matrix, got shape {a.shape}")
    out = _make(a.data.T, (a,), None)
    out._backprop = (lambda: _accum(a, out.grad.T)) if out.requires_grad else None
    return out


def concat(parts: list[Tensor], axis: int = 0) -> Tensor:
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError:
        shapes = [p.shape for p in parts]
        raise ShapeMismatch(f"concat: incompatible shapes {shapes}") from None
    out = _make(data, tuple(parts), None)

    def backprop():
        offset = 0
        for p in parts:
            size = p.data.shape[axis]
            sl = [slice(None)] * data.ndim
            sl[axis] = slice(offset, offset + size)
            _accum(p, out.grad[tuple(sl)])
            offset += size

    out._backprop = backprop if out.requires_grad else None
    return out


def stack_rows(rows: list[Tensor]) -> Tensor:
    """Stack vectors into a matrix, one row per vector."""
    data = np.stack([r.data for r in rows], axis=0)
    out = _make(data, tuple(rows), None)

    def backprop():
        for i, r in enumerate(rows):
            _accum(r, out.grad[i])

    out._backprop = backprop if out.requires_grad else None
    return out


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                 np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = _make(y, (a,), None)
    out._backprop = (lambda: _accum(a, out.grad * y * (1.0 - y))) if out.requires_grad else None
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = _make(y, (a,), None)
    out._backprop = (lambda: _accum(a, out.grad * (1.0 - y * y))) if out.requires_grad else None
    return out


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _make(np.log(a.data), (a,), None)
    out._backprop = (lambda: _accum(a, out.grad / a.data)) if out.requires_grad else None
    return out


def reduce_sum(a: Tensor, axis=None) -> Tensor:
    out = _make(a.data.sum(axis=axis), (a,), None)

    def backprop():
        g = out.grad
        if axis is not None:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.data.shape).copy())

    out._backprop = backprop if out.requires_grad else None
    return out


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    x = a.data
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = _make(y, (a,), None)

    def backprop():
        g = out.grad
        _accum(a, (g - (g * y).sum(axis=axis, keepdims=True)) * y)

    out._backprop = backprop if out.requires_grad else None
    return out


def embedding_lookup(table: Tensor, ids) -> Tensor:
    """Row(s) of an embedding table; int id gives a vector, a list gives a matrix."""
    idx = np.asarray(ids)
    out = _make(table.data[idx], (table,), None)

    def backprop():
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, idx, out.grad)

    out._backprop = backprop if out.requires_grad else None
    return out


def pick(a: Tensor, index: int) -> Tensor:
    """Scalar element of a vector."""
    if a.data.ndim != 1:
        raise ShapeMismatch(f"pick expects a vector, got shape {a.shape}")
    if not 0 <= index < a.data.shape[0]:
        raise TypedescError(f"pick: index {index} out of range for shape {a.shape}")
    out = _make(np.asarray(a.data[index]), (a,), None)

    def backprop():
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        a.grad[index] += out.grad

    out._backprop = backprop if out.requires_grad else None
    return out


def scatter_add(src: Tensor, index, size: int) -> Tensor:
    """out[j] = sum of src[i] over positions i with index[i] == j."""
    idx = np.asarray(index)
    if src.data.ndim != 1 or idx.shape != src.data.shape:
        raise ShapeMismatch(f"scatter_add: src shape {src.shape} vs index shape {idx.shape}")
    data = np.zeros(size, dtype=np.float64)
    np.add.at(data, idx, src.data)
    out = _make(data, (src,), None)
    out._backprop = (lambda: _accum(src, out.grad[idx])) if out.requires_grad else None
    return out


def add_n(parts: list[Tensor]) -> Tensor:
    data = parts[0].data.copy()
    for p in parts[1:]:
        data = data + p.data
    out = _make(data, tuple(parts), None)

    def backprop():
        for p in parts:
            _accum(p, out.grad)

    out._backprop = backprop if out.requires_grad else None
    return out


def cross_entropy(dist: Tensor, target: int, from_logits: bool = True) -> Tensor:
    """Negative log-likelihood of one target id.

    With logits, uses the shifted log-sum-exp form so large scores never
    overflow; with probabilities, takes -log(p[target]) directly.
    """
    if dist.data.ndim != 1:
        raise ShapeMismatch(f"cross_entropy expects a vector, got shape {dist.shape}")
    if not 0 <= target < dist.data.shape[0]:
        raise TypedescError(f"cross_entropy: target {target} out of range for shape {dist.shape}")
    x = dist.data
    if from_logits:
        m = x.max()
        lse = m + np.log(np.exp(x - m).sum())
        out = _make(np.asarray(lse - x[target]), (dist,), None)

        def backprop():
            p = np.exp(x - lse)
            p[target] -= 1.0
            _accum(dist, out.grad * p)

    else:
        p_t = x[target]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = _make(np.asarray(-np.log(p_t)), (dist,), None)

        def backprop():
            if dist.grad is None:
                dist.grad = np.zeros_like(dist.data)
            dist.grad[target] += -out.grad / p_t

    out._backprop = backprop if out.requires_grad else None
    return out


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=np.float64))


# ---------------------------------------------------------------------------
# GRU cell
# ---------------------------------------------------------------------------

@dataclass
class GRUWeights:
    wz: Tensor
    uz: Tensor
    bz: Tensor
    wr: Tensor
    ur: Tensor
    br: Tensor
    wh: Tensor
    uh: Tensor
    bh: Tensor


def gru_cell(x: Tensor, h: Tensor, w: GRUWeights) -> Tensor:
    """One GRU step.

    z = sig(Wz x + Uz h + bz); r = sig(Wr x + Ur h + br)
    hbar = tanh(Wh x + Uh (r*h) + bh); h' = (1-z)*h + z*hbar
    """
    z = sigmoid(w.wz @ x + w.uz @ h + w.bz)
    r = sigmoid(w.wr @ x + w.ur @ h + w.br)
    hbar = tanh(w.wh @ x + w.uh @ (r * h) + w.bh)
    return (1.0 - z) * h + z * hbar


def init_gru(params: dict, prefix: str, d_in: int, d_h: int, rng):
    """Register the nine GRU weight tensors under `prefix` in `params`."""
    for gate in ("z", "r", "h"):
        params[f"{prefix}.w{gate}"] = uniform_param(rng, (d_h, d_in))
        params[f"{prefix}.u{gate}"] = uniform_param(rng, (d_h, d_h))
        params[f"{prefix}.b{gate}"] = uniform_param(rng, (d_h,))


def gru_weights(params: dict, prefix: str) -> GRUWeights:
    return GRUWeights(*(params[f"{prefix}.{name}"]
                        for name in ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")))


def uniform_param(rng, shape, scale: float = 0.08) -> Tensor:
    """Learnable tensor initialized uniform(-scale, scale)."""
    return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=True)


# ---------------------------------------------------------------------------
# optimization
# ---------------------------------------------------------------------------

class Adam:
    """Adam with bias correction over a named parameter dict."""

    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise TypedescError(f"non-finite gradient for parameter '{name}'")
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1 ** self.t)
            v_hat = v / (1.0 - b2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grads(self):
        for p in self.params.values():
            p.grad = None


def global_grad_norm(params: dict) -> float:
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    return float(np.sqrt(total))


def clip_gradients(params: dict, max_norm: float) -> float:
    """Scale all gradients so the global norm is at most max_norm; returns the norm."""
    norm = global_grad_norm(params)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad *= scale
    return norm


def grad_check(f, params, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central finite-difference gradients.

    `f` rebuilds the scalar loss from the current parameter values on every call.
    """
    params = list(params)
    for p in params:
        p.grad = None
    loss = f()
    if not np.isfinite(loss.data):
        raise TypedescError("grad_check: loss is not finite")
    loss.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    worst = 0.0
    with no_grad():
        for p, a in zip(params, analytic):
            flat = p.data.reshape(-1)
            aflat = a.reshape(-1)
            for i in range(flat.shape[0]):
                orig = flat[i]
                flat[i] = orig + epsilon
                f_plus = float(f().data)
                flat[i] = orig - epsilon
                f_minus = float(f().data)
                flat[i] = orig
                if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                    raise TypedescError("grad_check: non-finite value during finite differences")
                numeric = (f_plus - f_minus) / (2.0 * epsilon)
                rel = abs(aflat[i] - numeric) / max(abs(aflat[i]) + abs(numeric), 1e-8)
                worst = max(worst, rel)
    return worst


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"TDCK"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: dict):
    """Names to shapes and raw little-endian float64 payloads, with a version header."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(params)))
        for name, p in params.items():
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            arr = p.data
            fh.write(struct.pack("<B", arr.ndim))
            if arr.ndim:
                fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> dict:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a typedesc checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"{path}: checkpoint version {version}, this build reads version "
                f"{CHECKPOINT_VERSION}")
        (count,) = struct.unpack("<I", fh.read(4))
        params = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim)) if ndim else ()
            n_items = int(np.prod(shape)) if shape else 1
            payload = fh.read(8 * n_items)
            arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
            params[name] = Tensor(arr, requires_grad=True)
        return params
