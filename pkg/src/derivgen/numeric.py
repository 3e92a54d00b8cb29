"""Dense-tensor core: reverse-mode gradients and the Adadelta update.

Everything runs on numpy float64 arrays. A ``Tensor`` wraps one array and,
when produced by an op, remembers its parents and a backward closure, so
``backward`` on a scalar loss can push gradients down to the parameters by
a reverse topological walk. No broadcasting beyond what the sequence model
needs, no GPU, no other optimizers.
"""

from __future__ import annotations

import base64
import json

import numpy as np


class Tensor:
    """A float64 array plus an optional gradient buffer.

    Parameters (``param=True``) own a persistent ``grad`` array that
    ``backward`` accumulates into until it is cleared. Intermediate
    tensors only carry the bookkeeping needed for the reverse pass.
    """

    __slots__ = ("values", "grad", "param", "_parents", "_backward")

    def __init__(self, values, parents=(), backward=None, param=False):
        self.values = np.asarray(values, dtype=np.float64)
        self.param = param
        self.grad = np.zeros_like(self.values) if param else None
        self._parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.values.shape

    def clear_grad(self):
        if self.grad is not None:
            self.grad[...] = 0.0

    def __repr__(self):
        return f"Tensor(shape={self.values.shape}, param={self.param})"


def parameter(values):
    return Tensor(values, param=True)


def constant(values):
    return Tensor(values)


def _check_same_shape(op, a, b):
    if a.values.shape != b.values.shape and not _broadcastable(a.values.shape, b.values.shape):
        raise ValueError(f"{op}: incompatible shapes {a.values.shape} and {b.values.shape}")


def _broadcastable(sa, sb):
    try:
        np.broadcast_shapes(sa, sb)
        return True
    except ValueError:
        return False


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def add(a, b):
    _check_same_shape("add", a, b)
    return Tensor(
        a.values + b.values,
        parents=(a, b),
        backward=lambda g: (_unbroadcast(g, a.values.shape), _unbroadcast(g, b.values.shape)),
    )


def sub(a, b):
    _check_same_shape("sub", a, b)
    return Tensor(
        a.values - b.values,
        parents=(a, b),
        backward=lambda g: (_unbroadcast(g, a.values.shape), -_unbroadcast(g, b.values.shape)),
    )


def mul(a, b):
    _check_same_shape("mul", a, b)
    return Tensor(
        a.values * b.values,
        parents=(a, b),
        backward=lambda g: (
            _unbroadcast(g * b.values, a.values.shape),
            _unbroadcast(g * a.values, b.values.shape),
        ),
    )


def scale(a, c):
    c = float(c)
    return Tensor(a.values * c, parents=(a,), backward=lambda g: (g * c,))


def matmul(a, b):
    av, bv = a.values, b.values
    if av.ndim == 0 or bv.ndim == 0 or av.shape[-1] != (bv.shape[0] if bv.ndim else -1):
        raise ValueError(f"matmul: incompatible shapes {av.shape} and {bv.shape}")

    def bw(g):
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        if av.ndim == 1 and bv.ndim == 2:
            return g @ bv.T, np.outer(av, g)
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        return g * bv, g * av  # both 1-D, g scalar

    return Tensor(av @ bv, parents=(a, b), backward=bw)


def tanh(a):
    out = np.tanh(a.values)
    return Tensor(out, parents=(a,), backward=lambda g: (g * (1.0 - out * out),))


def sigmoid(a):
    x = a.values
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    return Tensor(out, parents=(a,), backward=lambda g: (g * out * (1.0 - out),))


def softmax(a):
    x = a.values
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return Tensor(out, parents=(a,), backward=bw)


def log_softmax(a):
    x = a.values
    shifted = x - x.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - logz

    def bw(g):
        return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

    return Tensor(out, parents=(a,), backward=bw)


def concat(tensors):
    """Concatenate 1-D tensors along axis 0."""
    sizes = [t.values.shape[0] for t in tensors]
    out = np.concatenate([t.values for t in tensors])

    def bw(g):
        grads = []
        off = 0
        for n in sizes:
            grads.append(g[off:off + n])
            off += n
        return tuple(grads)

    return Tensor(out, parents=tuple(tensors), backward=bw)


def stack(tensors):
    """Stack equal-length 1-D tensors into a matrix (rows)."""
    out = np.stack([t.values for t in tensors])

    def bw(g):
        return tuple(g[i] for i in range(len(tensors)))

    return Tensor(out, parents=tuple(tensors), backward=bw)


def row(table, index):
    """Embedding lookup: one row of a 2-D parameter table as a 1-D tensor."""
    index = int(index)
    n = table.values.shape[0]
    if not 0 <= index < n:
        raise ValueError(f"row: index {index} out of range for table with {n} rows")

    def bw(g):
        gt = np.zeros_like(table.values)
        gt[index] = g
        return (gt,)

    return Tensor(table.values[index], parents=(table,), backward=bw)


def pick(a, index):
    """Scalar element of a 1-D tensor."""
    index = int(index)

    def bw(g):
        ga = np.zeros_like(a.values)
        ga[index] = g
        return (ga,)

    return Tensor(a.values[index], parents=(a,), backward=bw)


def sum_all(a):
    def bw(g):
        return (np.full_like(a.values, float(g)),)

    return Tensor(a.values.sum(), parents=(a,), backward=bw)


def backward(loss):
    """Populate parameter gradients with d(loss)/d(param).

    Gradients accumulate into ``param.grad`` across calls until cleared.
    """
    if loss.values.size != 1:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.values.shape}")

    order = []
    seen = set()
    stack_ = [(loss, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack_.append((p, False))

    grads = {id(loss): np.ones_like(loss.values)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.param:
            node.grad += g
        if node._backward is None:
            continue
        for p, pg in zip(node._parents, node._backward(g)):
            if id(p) in grads:
                grads[id(p)] = grads[id(p)] + pg
            else:
                grads[id(p)] = pg


class AdadeltaState:
    """Per-parameter running averages of squared gradients and updates."""

    def __init__(self, params, rho=0.95, eps=1e-6):
        if not 0.0 < rho < 1.0:
            raise ValueError(f"rho must be in (0,1), got {rho}")
        if eps <= 0.0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.rho = rho
        self.eps = eps
        self.accum_grad_sq = {name: np.zeros_like(p.values) for name, p in params.items()}
        self.accum_update_sq = {name: np.zeros_like(p.values) for name, p in params.items()}


def global_grad_norm(params):
    return float(np.sqrt(sum(float((p.grad ** 2).sum()) for p in params.values())))


def adadelta_step(params, state, clip_norm=None):
    """One Adadelta update over all parameters; clears gradients afterwards."""
    if clip_norm is not None:
        norm = global_grad_norm(params)
        if norm > clip_norm:
            factor = clip_norm / norm
            for p in params.values():
                p.grad *= factor
    rho, eps = state.rho, state.eps
    for name, p in params.items():
        g = p.grad
        eg = state.accum_grad_sq[name]
        ed = state.accum_update_sq[name]
        eg *= rho
        eg += (1.0 - rho) * g * g
        delta = -np.sqrt(ed + eps) / np.sqrt(eg + eps) * g
        ed *= rho
        ed += (1.0 - rho) * delta * delta
        p.values += delta
        p.grad[...] = 0.0


def uniform_init(shape, rng, scale=0.08):
    return parameter(rng.uniform(-scale, scale, size=shape))


def zeros_init(shape):
    return parameter(np.zeros(shape))


CHECKPOINT_VERSION = 1


def save_params(path, params, meta=None):
    """Write parameters to a JSON container with base64 little-endian float64 data."""
    payload = {
        "format": "derivgen-checkpoint",
        "version": CHECKPOINT_VERSION,
        "meta": meta or {},
        "params": {
            name: {
                "shape": list(p.values.shape),
                "dtype": "<f8",
                "data": base64.b64encode(np.ascontiguousarray(p.values, dtype="<f8").tobytes()).decode("ascii"),
            }
            for name, p in params.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_params(path):
    """Inverse of save_params; returns (params dict, meta dict). Bit-exact."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "derivgen-checkpoint":
        raise ValueError(f"{path}: not a derivgen checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    params = {}
    for name, entry in payload["params"].items():
        raw = base64.b64decode(entry["data"])
        arr = np.frombuffer(raw, dtype="<f8").reshape(entry["shape"]).copy()
        params[name] = parameter(arr)
    return params, payload.get("meta", {})
