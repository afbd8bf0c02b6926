"""Adam optimizer over ``Tensor2D`` parameters.

Implements the standard update with first/second moment estimates and
bias correction; the step denominator is sqrt(v_hat) + eps.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError, ShapeError
from .tensor import Tensor2D


class ParamTensor:
    """A trainable tensor plus its optimizer state.

    Moments are zero-initialized with the value's shape and persist for
    the parameter's lifetime; ``step_count`` drives bias correction.
    """

    __slots__ = ("name", "value", "first_moment", "second_moment", "step_count")

    def __init__(self, values, name: str = ""):
        self.name = name
        self.value = Tensor2D(values, requires_grad=True)
        self.first_moment = np.zeros_like(self.value.values)
        self.second_moment = np.zeros_like(self.value.values)
        self.step_count = 0

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"ParamTensor({self.name!r}, shape={self.value.shape})"


def adam_step(p: ParamTensor, grad: np.ndarray, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> ParamTensor:
    """Apply one Adam update to ``p`` in place and return it."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != p.value.shape:
        raise ShapeError(f"adam_step: grad {grad.shape} does not match param {p.value.shape}")
    if not np.all(np.isfinite(grad)):
        raise NumericalError(f"adam_step: non-finite gradient for {p.name or 'parameter'}")
    p.step_count += 1
    p.first_moment *= beta1
    p.first_moment += (1.0 - beta1) * grad
    p.second_moment *= beta2
    p.second_moment += (1.0 - beta2) * grad * grad
    m_hat = p.first_moment / (1.0 - beta1 ** p.step_count)
    v_hat = p.second_moment / (1.0 - beta2 ** p.step_count)
    p.value.values -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return p


class Adam:
    """Convenience wrapper driving ``adam_step`` over a parameter list."""

    def __init__(self, params: list[ParamTensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self) -> None:
        """Update every registered parameter from its ``value.grad``.

        Every registered parameter must have received a gradient from
        the latest backward pass; a missing gradient means the caller
        registered a parameter outside the active loss graph.
        """
        for p in self.params:
            if p.value.grad is None:
                raise NumericalError(f"Adam.step: no gradient for {p.name or 'parameter'}")
            adam_step(p, p.value.grad, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.value.grad = None
