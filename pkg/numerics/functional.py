"""
Neural-network operations on Tensors: products, normalisation, activations, losses

Fused operations (softmax, layer_norm, gelu, cross_entropy) carry closed-form
backward passes; ``numerics.gradcheck`` verifies each of them.
"""
from typing import Optional, Sequence, Union

import numpy as np

from transhp.exceptions import DimensionError, NumericError
from .tensor import Function, Tensor

GELU_COEFF = 0.044715
SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))


def _check_finite(array: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(array)):
        raise NumericError(f"{op} received non-finite input")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes, broadcasting leading axes

    Raises:
        DimensionError: naming both shapes when the inner dimensions disagree
    """
    return a @ b


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ weight.T + bias`` with weight stored as (out_features, in_features)"""
    out = matmul(x, weight.transpose())
    return out + bias if bias is not None else out


class Softmax(Function):
    def forward(self, x, axis=-1, mask=None):
        _check_finite(x, 'softmax')
        self.axis = axis
        if mask is not None:
            shifted = np.where(mask, -np.inf, x)
            shifted = shifted - np.max(shifted, axis=axis, keepdims=True)
            e = np.where(mask, 0.0, np.exp(shifted)).astype(x.dtype)
        else:
            e = np.exp(x - np.max(x, axis=axis, keepdims=True))
        self.out = e / np.sum(e, axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - np.sum(grad * y, axis=self.axis, keepdims=True)),)


def softmax(x: Tensor, axis: int = -1, mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Numerically stable softmax (max-subtraction is unconditional)

    Args:
        x: logits
        axis: axis normalised to one
        mask: optional boolean array broadcastable to x; True entries are
            excluded and receive exactly zero probability

    Raises:
        NumericError: if x holds NaN or infinities
    """
    return Softmax.apply(x, axis=axis, mask=mask)


class LayerNorm(Function):
    def forward(self, x, gain, bias, eps=1e-5):
        self.mean = x.mean(axis=-1, keepdims=True)
        centered = x - self.mean
        var = (centered * centered).mean(axis=-1, keepdims=True)
        self.rstd = 1.0 / np.sqrt(var + eps)
        self.xhat = centered * self.rstd
        return self.xhat * gain + bias

    def backward(self, grad):
        x, gain, bias = self.inputs
        width = x.shape[-1]
        gxhat = grad * gain.data
        grad_x = (self.rstd / width) * (
            width * gxhat
            - gxhat.sum(axis=-1, keepdims=True)
            - self.xhat * (gxhat * self.xhat).sum(axis=-1, keepdims=True)
        )
        lead = tuple(range(grad.ndim - 1))
        return grad_x, (grad * self.xhat).sum(axis=lead), grad.sum(axis=lead)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    if gain.shape != (x.shape[-1],) or bias.shape != (x.shape[-1],):
        raise DimensionError("layer_norm affine parameters must match the token width",
                             x.shape, gain.shape, bias.shape)
    if eps <= 0:
        raise ValueError(f"layer_norm eps must be positive, got {eps}")
    return LayerNorm.apply(x, gain, bias, eps=eps)


class Gelu(Function):
    """tanh approximation of GELU"""

    def forward(self, x):
        inner = SQRT_2_OVER_PI * (x + GELU_COEFF * x ** 3)
        self.t = np.tanh(inner)
        return 0.5 * x * (1.0 + self.t)

    def backward(self, grad):
        x = self.inputs[0].data
        dinner = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEFF * x * x)
        local = 0.5 * (1.0 + self.t) + 0.5 * x * (1.0 - self.t * self.t) * dinner
        return (grad * local,)


def gelu(x: Tensor) -> Tensor:
    return Gelu.apply(x)


class CrossEntropy(Function):
    def forward(self, logits, targets=None):
        _check_finite(logits, 'cross_entropy')
        self.targets = targets
        shifted = logits - np.max(logits, axis=-1, keepdims=True)
        log_norm = np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
        log_probs = shifted - log_norm
        self.probs = np.exp(log_probs)
        picked = np.take_along_axis(log_probs, targets[..., None], axis=-1)[..., 0]
        self.count = max(picked.size, 1)
        return -picked.mean() if picked.ndim else -picked

    def backward(self, grad):
        delta = self.probs.copy()
        np.put_along_axis(delta, self.targets[..., None],
                          np.take_along_axis(delta, self.targets[..., None], axis=-1) - 1.0, axis=-1)
        return (grad * delta / self.count,)


def cross_entropy(logits: Tensor, target: Union[int, Sequence[int], np.ndarray]) -> Tensor:
    """
    Softmax cross-entropy, ``-log softmax(logits)[target]``

    A 1-D logits vector with an integer target gives the per-sample loss; a
    batch of logits (B x n) with B targets gives the batch mean.

    Raises:
        IndexError: if any target falls outside [0, n)
    """
    targets = np.asarray(target, dtype=np.int64)
    classes = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise DimensionError("cross_entropy needs one target per logit row", logits.shape, targets.shape)
    if targets.size and (targets.min() < 0 or targets.max() >= classes):
        raise IndexError(f"target index out of range [0, {classes}): {targets.tolist()}")
    return CrossEntropy.apply(logits, targets=targets)


class Concat(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.bounds = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.bounds, axis=self.axis))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


class BroadcastTo(Function):
    def forward(self, x, shape=()):
        return np.broadcast_to(x, shape).copy()

    def backward(self, grad):
        return (self.unbroadcast(grad, self.inputs[0].shape),)


def broadcast_to(x: Tensor, shape) -> Tensor:
    return BroadcastTo.apply(x, shape=tuple(shape))


class Diagonal(Function):
    def forward(self, x):
        return np.diagonal(x, axis1=-2, axis2=-1).copy()

    def backward(self, grad):
        full = np.zeros_like(self.inputs[0].data)
        size = grad.shape[-1]
        full[..., np.arange(size), np.arange(size)] = grad
        return (full,)


def diagonal(x: Tensor) -> Tensor:
    """Diagonal of the trailing square matrices, shape (..., M)"""
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise DimensionError("diagonal needs square trailing matrices", x.shape)
    return Diagonal.apply(x)
