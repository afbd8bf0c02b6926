"""Dense float64 matrices with reverse-mode gradients.

The training graph needs only a fixed, enumerated set of operations
(matrix product, bias add, ReLU, row softmax, row normalization, a few
elementwise maps and reductions). Each operation computes its value
eagerly with numpy and registers a closure that propagates gradients to
its operands; ``Tensor2D.backward()`` replays the closures in reverse
topological order. There is no broadcasting beyond what the listed ops
define and no support for arbitrary user functions.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

# Added to row norms before division so zero rows stay finite.
NORM_EPS = 1e-12
# Lower clamp for log arguments; keeps losses finite for degenerate inputs.
LOG_EPS = 1e-12

_grad_enabled = True


class no_grad:
    """Context manager that skips graph construction inside its body."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


class Tensor2D:
    """A 2-D float64 array plus an optional gradient buffer.

    ``grad`` is populated (shape-matched to ``values``) when a scalar
    result built from this tensor runs ``backward()``. Tensors created
    directly from data default to ``requires_grad=False`` and act as
    constants.
    """

    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"Tensor2D expects a 2-D array, got shape {arr.shape}")
        self.values = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def item(self) -> float:
        if self.values.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.values.shape}")
        return float(self.values[0, 0])

    def backward(self) -> None:
        """Accumulate d(self)/d(ancestor) into every ancestor's ``grad``.

        Only valid on 1x1 (scalar) results. Gradients of all tensors
        reached in this pass are reset first, so each backward call
        reports the current graph only.
        """
        if self.values.shape != (1, 1):
            raise ShapeError(f"backward() needs a 1x1 tensor, got {self.values.shape}")
        order: list[Tensor2D] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor2D, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        for node in order:
            node.grad = np.zeros_like(node.values)
        self.grad = np.ones((1, 1))
        for node in reversed(order):
            if node._backward is not None:
                node._backward()

    def detach(self) -> "Tensor2D":
        return Tensor2D(self.values.copy())

    def __repr__(self):
        return f"Tensor2D(shape={self.values.shape}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor2D:
    """Wrap arrays/lists as constant tensors; pass tensors through."""
    return x if isinstance(x, Tensor2D) else Tensor2D(x)


def _node(values: np.ndarray, parents: tuple, backward) -> Tensor2D:
    out = Tensor2D(values)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _acc(t: Tensor2D, delta) -> None:
    if t.requires_grad:
        t.grad += delta


def matmul(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    out_values = a.values @ b.values

    def backward():
        _acc(a, out.grad @ b.values.T)
        _acc(b, a.values.T @ out.grad)

    out = _node(out_values, (a, b), backward)
    return out


def transpose(a: Tensor2D) -> Tensor2D:
    def backward():
        _acc(a, out.grad.T)

    out = _node(a.values.T.copy(), (a,), backward)
    return out


def add(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes differ, {a.shape} vs {b.shape}")

    def backward():
        _acc(a, out.grad)
        _acc(b, out.grad)

    out = _node(a.values + b.values, (a, b), backward)
    return out


def sub(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    if a.shape != b.shape:
        raise ShapeError(f"sub: shapes differ, {a.shape} vs {b.shape}")

    def backward():
        _acc(a, out.grad)
        _acc(b, -out.grad)

    out = _node(a.values - b.values, (a, b), backward)
    return out


def mul(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    """Elementwise (Hadamard) product of same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"mul: shapes differ, {a.shape} vs {b.shape}")

    def backward():
        _acc(a, out.grad * b.values)
        _acc(b, out.grad * a.values)

    out = _node(a.values * b.values, (a, b), backward)
    return out


def scale(a: Tensor2D, c: float) -> Tensor2D:
    c = float(c)

    def backward():
        _acc(a, c * out.grad)

    out = _node(c * a.values, (a,), backward)
    return out


def add_bias(x: Tensor2D, bias: Tensor2D) -> Tensor2D:
    """Add a 1xC bias row to every row of an NxC matrix."""
    if bias.rows != 1 or bias.cols != x.cols:
        raise ShapeError(f"add_bias: bias {bias.shape} does not match input {x.shape}")

    def backward():
        _acc(x, out.grad)
        _acc(bias, out.grad.sum(axis=0, keepdims=True))

    out = _node(x.values + bias.values, (x, bias), backward)
    return out


def relu(x: Tensor2D) -> Tensor2D:
    """Elementwise max(0, x); the subgradient at 0 is taken as 0."""
    mask = x.values > 0

    def backward():
        _acc(x, out.grad * mask)

    out = _node(np.where(mask, x.values, 0.0), (x,), backward)
    return out


def softmax_rows(x: Tensor2D) -> Tensor2D:
    """Row-wise softmax, computed with row-max subtraction for stability."""
    shifted = x.values - x.values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out_values = e / e.sum(axis=1, keepdims=True)

    def backward():
        g = out.grad
        s = out.values
        _acc(x, s * (g - (g * s).sum(axis=1, keepdims=True)))

    out = _node(out_values, (x,), backward)
    return out


def normalize_rows(x: Tensor2D) -> Tensor2D:
    """Scale every row to unit L2 norm (norms guarded by ``NORM_EPS``)."""
    norms = np.linalg.norm(x.values, axis=1, keepdims=True)
    denom = norms + NORM_EPS
    out_values = x.values / denom

    def backward():
        g = out.grad
        dot = (g * x.values).sum(axis=1, keepdims=True)
        safe = np.maximum(norms, 1e-30)
        _acc(x, g / denom - x.values * (dot / (safe * denom * denom)))

    out = _node(out_values, (x,), backward)
    return out


def exp(x: Tensor2D) -> Tensor2D:
    out_values = np.exp(x.values)

    def backward():
        _acc(x, out.grad * out.values)

    out = _node(out_values, (x,), backward)
    return out


def log_clamped(x: Tensor2D) -> Tensor2D:
    """Natural log with the argument clamped below at ``LOG_EPS``.

    Entries under the clamp get zero gradient, mirroring the ReLU
    subgradient convention.
    """
    clamped = np.maximum(x.values, LOG_EPS)

    def backward():
        _acc(x, out.grad * (x.values >= LOG_EPS) / clamped)

    out = _node(np.log(clamped), (x,), backward)
    return out


def row_sum(x: Tensor2D) -> Tensor2D:
    """Sum each row: NxC -> Nx1."""

    def backward():
        _acc(x, np.broadcast_to(out.grad, x.shape))

    out = _node(x.values.sum(axis=1, keepdims=True), (x,), backward)
    return out


def col_mean(x: Tensor2D) -> Tensor2D:
    """Mean of each column: NxC -> 1xC."""
    n = x.rows

    def backward():
        _acc(x, np.broadcast_to(out.grad / n, x.shape))

    out = _node(x.values.mean(axis=0, keepdims=True), (x,), backward)
    return out


def sum_all(x: Tensor2D) -> Tensor2D:
    """Sum of all entries as a 1x1 tensor."""

    def backward():
        _acc(x, np.full(x.shape, out.grad[0, 0]))

    out = _node(np.array([[x.values.sum()]]), (x,), backward)
    return out


def diag_part(x: Tensor2D) -> Tensor2D:
    """Diagonal of a square matrix as an Nx1 column."""
    if x.rows != x.cols:
        raise ShapeError(f"diag_part: matrix is not square, {x.shape}")
    n = x.rows
    idx = np.arange(n)

    def backward():
        delta = np.zeros(x.shape)
        delta[idx, idx] = out.grad[:, 0]
        _acc(x, delta)

    out = _node(x.values[idx, idx].reshape(n, 1).copy(), (x,), backward)
    return out


def zero_diag(x: Tensor2D) -> Tensor2D:
    """Copy of a square matrix with its diagonal set to 0."""
    if x.rows != x.cols:
        raise ShapeError(f"zero_diag: matrix is not square, {x.shape}")
    n = x.rows
    idx = np.arange(n)
    out_values = x.values.copy()
    out_values[idx, idx] = 0.0

    def backward():
        delta = out.grad.copy()
        delta[idx, idx] = 0.0
        _acc(x, delta)

    out = _node(out_values, (x,), backward)
    return out
