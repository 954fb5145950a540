"""Minimal reverse-mode autodiff on numpy arrays.

Forward ops append nodes to a Tape in execution order; backward walks the
tape in reverse, so recorded order doubles as a topological order. Gradients
accumulate additively at shared inputs. Float32 by default; pass float64
arrays for gradient checking.
"""

from __future__ import annotations

import numpy as np


class AutodiffError(Exception):
    pass


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn", "tape")

    def __init__(self, data, tape=None, parents=(), backward_fn=None):
        self.data = np.asarray(data)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.tape = tape
        if tape is not None:
            tape.nodes.append(self)

    @property
    def shape(self):
        return self.data.shape

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None


class Tape:
    """Ordered record of op outputs; reverse traversal visits each once."""

    def __init__(self):
        self.nodes: list[Tensor] = []


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum-reduce a gradient over axes that were broadcast in the forward op."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def _node(tape, data, parents, backward_fn):
    return Tensor(data, tape=tape, parents=parents, backward_fn=backward_fn)


def add(tape, a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def bw(g):
        a.accumulate(_unbroadcast(g, a.shape))
        b.accumulate(_unbroadcast(g, b.shape))
    return _node(tape, out_data, (a, b), bw)


def sub(tape, a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def bw(g):
        a.accumulate(_unbroadcast(g, a.shape))
        b.accumulate(_unbroadcast(-g, b.shape))
    return _node(tape, out_data, (a, b), bw)


def mul(tape, a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def bw(g):
        a.accumulate(_unbroadcast(g * b.data, a.shape))
        b.accumulate(_unbroadcast(g * a.data, b.shape))
    return _node(tape, out_data, (a, b), bw)


def scale(tape, a: Tensor, c: float) -> Tensor:
    def bw(g):
        a.accumulate(g * c)
    return _node(tape, a.data * c, (a,), bw)


def matmul(tape, a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data @ b.data

    def bw(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        a.accumulate(_unbroadcast(ga, a.shape))
        b.accumulate(_unbroadcast(gb, b.shape))
    return _node(tape, out_data, (a, b), bw)


def transpose(tape, a: Tensor, axes) -> Tensor:
    inv = np.argsort(axes)

    def bw(g):
        a.accumulate(np.transpose(g, inv))
    return _node(tape, np.transpose(a.data, axes), (a,), bw)


def reshape(tape, a: Tensor, shape) -> Tensor:
    def bw(g):
        a.accumulate(g.reshape(a.shape))
    return _node(tape, a.data.reshape(shape), (a,), bw)


def relu(tape, a: Tensor) -> Tensor:
    mask = a.data > 0

    def bw(g):
        a.accumulate(g * mask)
    return _node(tape, a.data * mask, (a,), bw)


def tanh(tape, a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def bw(g):
        a.accumulate(g * (1.0 - out_data ** 2))
    return _node(tape, out_data, (a,), bw)


def affine(tape, x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with bias broadcast over leading axes."""
    out_data = x.data @ w.data + b.data

    def bw(g):
        x.accumulate(_unbroadcast(g @ w.data.T, x.shape))
        gw = np.swapaxes(x.data, -1, -2) @ g
        w.accumulate(_unbroadcast(gw, w.shape))
        b.accumulate(_unbroadcast(g, b.shape))
    return _node(tape, out_data, (x, w, b), bw)


def embedding(tape, table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather from an embedding table; backward scatter-adds."""
    ids = np.asarray(ids)
    out_data = table.data[ids]

    def bw(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids, g)
    return _node(tape, out_data, (table,), bw)


def softmax(tape, a: Tensor, additive_mask: np.ndarray | None = None) -> Tensor:
    """Row softmax over the last axis; optional additive pre-softmax mask."""
    logits = a.data if additive_mask is None else a.data + additive_mask
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        dot = (g * out_data).sum(axis=-1, keepdims=True)
        a.accumulate(out_data * (g - dot))
    return _node(tape, out_data, (a,), bw)


def log_softmax(tape, a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out_data = shifted - lse
    probs = np.exp(out_data)

    def bw(g):
        a.accumulate(g - probs * g.sum(axis=-1, keepdims=True))
    return _node(tape, out_data, (a,), bw)


def layer_norm(tape, x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out_data = xhat * gain.data + bias.data

    def bw(g):
        d = x.shape[-1]
        gx_hat = g * gain.data
        term = gx_hat - gx_hat.mean(axis=-1, keepdims=True) \
            - xhat * (gx_hat * xhat).mean(axis=-1, keepdims=True)
        x.accumulate(term * inv)
        gain.accumulate(_unbroadcast(g * xhat, gain.shape))
        bias.accumulate(_unbroadcast(g, bias.shape))
    return _node(tape, out_data, (x, gain, bias), bw)


def attention(tape, q: Tensor, k: Tensor, v: Tensor,
              additive_mask: np.ndarray | None = None) -> Tensor:
    """Scaled dot-product attention over the last two axes.

    q: (..., Lq, dh), k/v: (..., Lk, dh). Output rows are convex combinations
    of v rows. The additive mask (-inf at disallowed positions) is a constant.
    """
    dh = q.shape[-1]
    scores = matmul(tape, q, transpose(tape, k, _swap_axes(k.data.ndim)))
    scores = scale(tape, scores, 1.0 / np.sqrt(dh))
    weights = softmax(tape, scores, additive_mask=additive_mask)
    return matmul(tape, weights, v)


def _swap_axes(ndim: int):
    axes = list(range(ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return tuple(axes)


def cross_entropy(tape, logits: Tensor, targets: np.ndarray,
                  mask: np.ndarray | None = None) -> Tensor:
    """Mean token-level cross-entropy: -log softmax(logits)[target].

    logits: (..., V), targets: integer array matching the leading shape.
    mask (same shape as targets) selects which positions count; the loss is
    the masked mean. A single target id with 1-D logits is also accepted.
    """
    targets = np.asarray(targets)
    if logits.data.shape[:-1] != targets.shape:
        raise AutodiffError(
            f"cross_entropy: logits {logits.data.shape} incompatible with targets {targets.shape}")
    if mask is None:
        mask = np.ones(targets.shape, dtype=logits.data.dtype)
    denom = mask.sum()
    if denom <= 0:
        raise AutodiffError("cross_entropy: empty mask")
    shifted = logits.data - logits.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    logp = shifted - lse
    nll = -np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    out_data = (nll * mask).sum() / denom
    probs = np.exp(logp)

    def bw(g):
        onehot = np.zeros_like(probs)
        np.put_along_axis(onehot, targets[..., None], 1.0, axis=-1)
        glogits = (probs - onehot) * (mask / denom)[..., None] * g
        logits.accumulate(glogits)
    return _node(tape, out_data, (logits,), bw)


def mean(tape, a: Tensor) -> Tensor:
    n = a.data.size

    def bw(g):
        a.accumulate(np.full(a.shape, g / n, dtype=a.data.dtype))
    return _node(tape, a.data.mean(), (a,), bw)


def backward(tape: Tape, loss: Tensor) -> None:
    """Reverse-accumulate gradients of a scalar loss through the tape."""
    if loss.data.ndim != 0:
        raise AutodiffError(f"backward expects a scalar loss, got shape {loss.shape}")
    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)


def grad_check(loss_fn, params: dict[str, Tensor], eps: float = 1e-5,
               max_coords_per_param: int = 20, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn() rebuilds the loss from the current parameter values. Relative
    error per coordinate is |a - n| / max(1e-8, |a| + |n|).
    """
    if not (1e-6 <= eps <= 1e-3):
        raise ValueError("eps must lie in [1e-6, 1e-3]")
    if not params:
        return 0.0
    rng = np.random.default_rng(seed)

    for p in params.values():
        p.zero_grad()
    tape = Tape()
    loss = loss_fn(tape)
    if not np.isfinite(loss.data):
        raise AutodiffError("non-finite loss in grad_check")
    backward(tape, loss)
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}

    def central(flat, c, h):
        orig = flat[c]
        flat[c] = orig + h
        hi = loss_fn(Tape()).data
        flat[c] = orig - h
        lo = loss_fn(Tape()).data
        flat[c] = orig
        return (hi - lo) / (2 * h)

    # below this magnitude a central difference is dominated by float64
    # cancellation in loss(+eps) - loss(-eps), so nothing can be certified
    noise_floor = 8.0 * max(abs(float(loss.data)), 1.0) * np.finfo(np.float64).eps / (2 * eps)

    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n_coords = min(max_coords_per_param, flat.size)
        coords = rng.choice(flat.size, size=n_coords, replace=False)
        for c in coords:
            a = analytic[name].reshape(-1)[c]
            numeric = central(flat, c, eps)
            if abs(a) < noise_floor and abs(numeric) < noise_floor:
                continue
            numeric_half = central(flat, c, eps / 2)
            # skip coordinates where the difference quotient itself has not
            # converged (relu kink inside the perturbation interval)
            fd_gap = abs(numeric - numeric_half) / max(1e-8, abs(numeric) + abs(numeric_half))
            if fd_gap > 0.03:
                continue
            err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            worst = max(worst, float(err))
    return worst
