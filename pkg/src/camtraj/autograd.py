"""A small define-by-run reverse-mode autodiff engine over float64 numpy arrays.

Operations executed inside an active :class:`Tape` are recorded when any input
requires a gradient; outside a tape they run as plain numpy (inference mode)::

    with Tape() as tape:
        loss = mean(relu(x @ w))
    tape.backward(loss)
    w.grad
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


class ShapeMismatch(ValueError):
    pass


class NonScalarRoot(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scalar_mul(self, other)
        return elementwise_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, rows: slice):
        return slice_rows(self, rows.start or 0, rows.stop if rows.stop is not None else self.shape[-2])


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Ordered record of executed operations; nodes appear after their parents."""

    _stack: list["Tape"] = []

    def __init__(self):
        self.nodes: list[Tensor] = []
        self._members: set[int] = set()

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        Tape._stack.pop()

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, node: Tensor) -> None:
        self.nodes.append(node)
        self._members.add(id(node))

    def backward(self, root: Tensor) -> None:
        backward(self, root)


def _active_tape() -> Tape | None:
    return Tape._stack[-1] if Tape._stack else None


def _node(data: np.ndarray, parents: Sequence[Tensor], backward_fn: Callable) -> Tensor:
    out = Tensor(data)
    tape = _active_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
        tape.record(out)
    return out


def backward(tape: Tape, root: Tensor) -> None:
    """Accumulate d(root)/d(leaf) into ``leaf.grad`` for every leaf on the tape."""
    if root.data.size != 1:
        raise NonScalarRoot(f"backward needs a scalar root, got shape {root.shape}")
    if id(root) not in tape._members:
        raise ValueError("root was not produced on this tape")
    grads: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            if parent.is_leaf:
                parent.grad = parent.grad + pg
            elif id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + pg
            else:
                grads[id(parent)] = pg


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(f"{op}: cannot broadcast {a.shape} with {b.shape}") from None


# arithmetic -----------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return _node(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return _node(a.data - b.data, (a, b), lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def scalar_mul(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _node(a.data * c, (a,), lambda g: (g * c,))


def elementwise_mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "elementwise_mul")
    return _node(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    if b.data.ndim == 2 and a.data.ndim > 2:
        # batched activations times a weight matrix: fold the batch into rows
        K = a.shape[-1]
        a2 = a.data.reshape(-1, K)
        out = (a2 @ b.data).reshape(a.shape[:-1] + (b.shape[-1],))

        def bw(g):
            g2 = g.reshape(-1, g.shape[-1])
            ga = (g2 @ b.data.T).reshape(a.shape) if a.requires_grad else None
            gb = a2.T @ g2 if b.requires_grad else None
            return ga, gb

        return _node(out, (a, b), bw)
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeMismatch(f"matmul: incompatible batch shapes {a.shape} @ {b.shape}") from None

    def bw(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.ascontiguousarray(np.swapaxes(b.data, -1, -2))), a.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.ascontiguousarray(np.swapaxes(a.data, -1, -2)), g), b.shape)
        return ga, gb

    return _node(out, (a, b), bw)


# shape ops ------------------------------------------------------------------


def transpose(a, axes: Sequence[int] | None = None) -> Tensor:
    """Swap the last two axes, or apply a full permutation."""
    a = as_tensor(a)
    if axes is None:
        if a.data.ndim < 2:
            raise ShapeMismatch(f"transpose needs >= 2 dims, got {a.shape}")
        axes = list(range(a.data.ndim - 2)) + [a.data.ndim - 1, a.data.ndim - 2]
    axes = tuple(axes)
    if sorted(axes) != list(range(a.data.ndim)):
        raise ShapeMismatch(f"transpose: bad permutation {axes} for shape {a.shape}")
    inverse = tuple(np.argsort(axes))
    return _node(np.ascontiguousarray(np.transpose(a.data, axes)), (a,), lambda g: (np.transpose(g, inverse),))


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeMismatch(f"reshape: cannot reshape {a.shape} to {tuple(shape)}") from None
    return _node(out, (a,), lambda g: (g.reshape(a.shape),))


def concat_rows(parts: Sequence) -> Tensor:
    """Concatenate along the row axis (-2)."""
    parts = [as_tensor(p) for p in parts]
    lead = {p.shape[:-2] + p.shape[-1:] for p in parts}
    if len(lead) != 1 or any(p.data.ndim < 2 for p in parts):
        raise ShapeMismatch(f"concat_rows: incompatible shapes {[p.shape for p in parts]}")
    sizes = [p.shape[-2] for p in parts]
    cuts = np.cumsum(sizes)[:-1]
    return _node(
        np.concatenate([p.data for p in parts], axis=-2),
        tuple(parts),
        lambda g: tuple(np.split(g, cuts, axis=-2)),
    )


def slice_rows(a, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    n = a.shape[-2]
    if not 0 <= start <= stop <= n:
        raise ShapeMismatch(f"slice_rows: [{start}:{stop}] out of range for {n} rows")

    def bw(g):
        full = np.zeros_like(a.data)
        full[..., start:stop, :] = g
        return (full,)

    return _node(a.data[..., start:stop, :], (a,), bw)


def row_gather(table, index) -> Tensor:
    """Embedding lookup: ``table[index]`` with scatter-add backward."""
    table = as_tensor(table)
    index = np.asarray(index, dtype=np.int64)
    if table.data.ndim != 2:
        raise ShapeMismatch(f"row_gather: table must be 2-D, got {table.shape}")
    if index.size and (index.min() < 0 or index.max() >= table.shape[0]):
        raise ShapeMismatch(f"row_gather: index out of range for {table.shape[0]} rows")

    def bw(g):
        full = np.zeros_like(table.data)
        np.add.at(full, index.reshape(-1), g.reshape(-1, table.shape[1]))
        return (full,)

    return _node(table.data[index], (table,), bw)


# nonlinearities --------------------------------------------------------------


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return _node(a.data * mask, (a,), lambda g: (g * mask,))


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(a) -> Tensor:
    """tanh approximation of GELU."""
    a = as_tensor(a)
    x = a.data
    x2 = x * x
    th = np.tanh(_GELU_C * x * (1.0 + 0.044715 * x2))
    out = 0.5 * x * (1.0 + th)

    def bw(g):
        du = _GELU_C * (1.0 + 3 * 0.044715 * x2)
        return (g * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du),)

    return _node(out, (a,), bw)


def softmax_rows(a) -> Tensor:
    """Softmax over the last axis."""
    a = as_tensor(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)
    return _node(s, (a,), lambda g: (s * (g - np.sum(g * s, axis=-1, keepdims=True)),))


def layer_norm_rows(a, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean, unit variance (no affine part)."""
    a = as_tensor(a)
    x = a.data
    n = x.shape[-1]
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt(np.mean(xc**2, axis=-1, keepdims=True) + eps)
    y = xc * inv

    def bw(g):
        gm = g.mean(axis=-1, keepdims=True)
        gy = np.sum(g * y, axis=-1, keepdims=True) / n
        return (inv * (g - gm - y * gy),)

    return _node(y, (a,), bw)


# reductions and losses -------------------------------------------------------


def sum(a) -> Tensor:  # noqa: A001 - mirrors the op-set name
    a = as_tensor(a)
    return _node(np.array(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def mean(a) -> Tensor:
    a = as_tensor(a)
    n = a.data.size
    return _node(np.array(a.data.mean()), (a,), lambda g: (np.full(a.shape, float(g) / n),))


def mse(a, b) -> Tensor:
    """Mean of squared differences."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"mse: shapes differ {a.shape} vs {b.shape}")
    diff = a.data - b.data
    n = diff.size
    return _node(np.array(np.mean(diff**2)), (a, b), lambda g: (2.0 * g * diff / n, -2.0 * g * diff / n))


def l1(a, b) -> Tensor:
    """Sum of absolute differences; subgradient uses sign(0) = 0."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"l1: shapes differ {a.shape} vs {b.shape}")
    diff = a.data - b.data
    sgn = np.sign(diff)
    return _node(np.array(np.abs(diff).sum()), (a, b), lambda g: (g * sgn, -g * sgn))


# verification --------------------------------------------------------------


def grad_of(f: Callable[[Tensor], Tensor], x: Tensor) -> np.ndarray:
    leaf = Tensor(x.data.copy(), requires_grad=True)
    with Tape() as tape:
        y = f(leaf)
    tape.backward(y)
    return leaf.grad


def finite_diff_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-4, floor: float = 1e-8) -> float:
    """Worst per-coordinate relative error of the tape gradient vs central differences.

    Uses the fourth-order central stencil
    ``(8 (f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h``, which lets ``h`` be
    large enough that cancellation error stays far below the tolerance.
    Relative error is ``|g - n| / max(|g|, |n|, floor)``.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    analytic = grad_of(f, x)
    base = x.data.astype(np.float64).copy()
    numeric = np.empty_like(base)
    flat = base.reshape(-1)
    num_flat = numeric.reshape(-1)

    def at(i, v):
        flat[i] = v
        return float(f(Tensor(base)).data)

    for i in range(flat.size):
        orig = flat[i]
        f2, f1, m1, m2 = (at(i, orig + k * h) for k in (2.0, 1.0, -1.0, -2.0))
        flat[i] = orig
        num_flat[i] = (8.0 * (f1 - m1) - (f2 - m2)) / (12.0 * h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))
