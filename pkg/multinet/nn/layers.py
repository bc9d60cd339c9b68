"""
Layers with hand-written forward and backward passes.

All tensors are float64 numpy arrays. Convolution and pooling operate on
NCHW batches; a single CHW image is promoted to a batch of one and the
result squeezed back.
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np
import numpy.typing as npt
from numpy.lib.stride_tricks import sliding_window_view

from multinet.core.errors import ShapeError

Tensor = npt.NDArray[np.float64]

BN_MOMENTUM = 0.1
BN_EPSILON = 1e-5


def init_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> Tensor:
    """Uniform fan-in scaled initialization in [-sqrt(1/fan_in), sqrt(1/fan_in)]."""
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(np.float64)


def _as_batch(x: Tensor, rank: int) -> Tuple[Tensor, bool]:
    if x.ndim == rank - 1:
        return x[np.newaxis], True
    if x.ndim != rank:
        raise ShapeError(f"expected a rank-{rank - 1} or rank-{rank} tensor, got shape {x.shape}")
    return x, False


# --------------------------------------------------------------------------
# Convolution
# --------------------------------------------------------------------------

def conv2d_forward(
    x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0
) -> Tuple[Tensor, Dict[str, Any]]:
    """
    Cross-correlation of an NCHW batch with OIHW kernels plus bias.

    Returns:
        Output batch and the cache needed by conv2d_backward
    """
    if stride < 1:
        raise ShapeError(f"stride must be positive, got {stride}")
    if padding < 0:
        raise ShapeError(f"padding must be non-negative, got {padding}")
    if weight.ndim != 4:
        raise ShapeError(f"kernel must be rank 4 (out, in, kh, kw), got shape {weight.shape}")
    n, c, h, w = x.shape
    out_ch, in_ch, kh, kw = weight.shape
    if c != in_ch:
        raise ShapeError(f"input channels {c} != kernel in-channels {in_ch}")
    if bias.shape != (out_ch,):
        raise ShapeError(f"bias shape {bias.shape} != ({out_ch},)")

    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    if oh < 1:
        raise ShapeError(f"output height {oh} < 1 (input height {h}, kernel {kh}, padding {padding})")
    if ow < 1:
        raise ShapeError(f"output width {ow} < 1 (input width {w}, kernel {kw}, padding {padding})")

    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    windows = windows[:, :, :oh, :ow]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, in_ch * kh * kw)

    out = cols @ weight.reshape(out_ch, -1).T + bias
    out = np.ascontiguousarray(out.reshape(n, oh, ow, out_ch).transpose(0, 3, 1, 2))
    cache = {
        "cols": cols,
        "x_shape": x.shape,
        "weight": weight,
        "stride": stride,
        "padding": padding,
        "out_hw": (oh, ow),
    }
    return out, cache


def conv2d_backward(dout: Tensor, cache: Dict[str, Any]) -> Tuple[Tensor, Tensor, Tensor]:
    """Gradients with respect to input, kernels and biases."""
    weight = cache["weight"]
    stride, padding = cache["stride"], cache["padding"]
    n, c, h, w = cache["x_shape"]
    out_ch, in_ch, kh, kw = weight.shape
    oh, ow = cache["out_hw"]

    d2 = dout.transpose(0, 2, 3, 1).reshape(-1, out_ch)
    dweight = (d2.T @ cache["cols"]).reshape(weight.shape)
    dbias = d2.sum(axis=0)

    dcols = (d2 @ weight.reshape(out_ch, -1)).reshape(n, oh, ow, in_ch, kh, kw)
    dxp = np.zeros((n, c, h + 2 * padding, w + 2 * padding))
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * (oh - 1) + 1:stride, j:j + stride * (ow - 1) + 1:stride] += (
                dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            )
    dx = dxp[:, :, padding:padding + h, padding:padding + w]
    return np.ascontiguousarray(dx), dweight, dbias


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Convolve a CHW image or NCHW batch."""
    batch, squeeze = _as_batch(x, 4)
    out, _ = conv2d_forward(batch, weight, bias, stride, padding)
    return out[0] if squeeze else out


# --------------------------------------------------------------------------
# Max pooling
# --------------------------------------------------------------------------

def maxpool2_forward(x: Tensor, floor: bool = False) -> Tuple[Tensor, Dict[str, Any]]:
    """
    2x2 max pooling with stride 2 on an NCHW batch.

    Odd spatial dimensions are rejected unless floor is set, in which case
    the trailing row or column is dropped.
    """
    n, c, h, w = x.shape
    if not floor:
        if h % 2:
            raise ShapeError(f"max-pool input height {h} is odd")
        if w % 2:
            raise ShapeError(f"max-pool input width {w} is odd")
    he, we = h - h % 2, w - w % 2
    if he == 0 or we == 0:
        raise ShapeError(f"max-pool input {h}x{w} too small")

    blocks = x[:, :, :he, :we].reshape(n, c, he // 2, 2, we // 2, 2)
    windows = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, he // 2, we // 2, 4)
    # argmax returns the first maximal index, which fixes the tie-break
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., np.newaxis], axis=-1)[..., 0]
    return np.ascontiguousarray(out), {"argmax": argmax, "x_shape": x.shape}


def maxpool2_backward(dout: Tensor, cache: Dict[str, Any]) -> Tensor:
    """Route the upstream gradient to each window's first argmax."""
    n, c, h, w = cache["x_shape"]
    argmax = cache["argmax"]
    hh, wh = argmax.shape[2], argmax.shape[3]
    onehot = argmax[..., np.newaxis] == np.arange(4)
    dwin = onehot * dout[..., np.newaxis]
    dblocks = dwin.reshape(n, c, hh, wh, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * hh, 2 * wh)
    dx = np.zeros((n, c, h, w))
    dx[:, :, :2 * hh, :2 * wh] = dblocks
    return dx


def maxpool2(x: Tensor, floor: bool = False) -> Tensor:
    batch, squeeze = _as_batch(x, 4)
    out, _ = maxpool2_forward(batch, floor)
    return out[0] if squeeze else out


# --------------------------------------------------------------------------
# Batch normalization
# --------------------------------------------------------------------------

def batchnorm_forward(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPSILON,
) -> Tuple[Tensor, Dict[str, Any]]:
    """
    Per-channel batch normalization of an NCHW batch.

    In training mode the running statistics are updated in place.
    """
    if x.ndim != 4:
        raise ShapeError(f"batch-norm expects NCHW input, got shape {x.shape}")
    n, c = x.shape[0], x.shape[1]
    if gamma.shape != (c,):
        raise ShapeError(f"batch-norm channels {c} != parameter channels {gamma.shape[0]}")
    view = (1, c, 1, 1)

    if training:
        if n < 2:
            raise ShapeError(f"batch-norm in train mode needs batch size >= 2, got {n}")
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        count = x.size // c
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var * count / max(count - 1, 1)
    else:
        mean, var = running_mean, running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean.reshape(view)) * inv_std.reshape(view)
    out = gamma.reshape(view) * x_hat + beta.reshape(view)
    cache = {"x_hat": x_hat, "inv_std": inv_std, "gamma": gamma, "training": training}
    return out, cache


def batchnorm_backward(dout: Tensor, cache: Dict[str, Any]) -> Tuple[Tensor, Tensor, Tensor]:
    """Gradients with respect to input, gamma and beta."""
    x_hat, inv_std, gamma = cache["x_hat"], cache["inv_std"], cache["gamma"]
    c = gamma.shape[0]
    view = (1, c, 1, 1)
    dgamma = (dout * x_hat).sum(axis=(0, 2, 3))
    dbeta = dout.sum(axis=(0, 2, 3))
    dx_hat = dout * gamma.reshape(view)

    if not cache["training"]:
        return dx_hat * inv_std.reshape(view), dgamma, dbeta

    m = dout.size // c
    sum_dx_hat = dx_hat.sum(axis=(0, 2, 3)).reshape(view)
    sum_dx_hat_x = (dx_hat * x_hat).sum(axis=(0, 2, 3)).reshape(view)
    dx = (inv_std.reshape(view) / m) * (m * dx_hat - sum_dx_hat - x_hat * sum_dx_hat_x)
    return dx, dgamma, dbeta


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    training: bool,
) -> Tensor:
    out, _ = batchnorm_forward(x, gamma, beta, running_mean, running_var, training)
    return out


# --------------------------------------------------------------------------
# Fully connected and activation
# --------------------------------------------------------------------------

def linear_forward(x: Tensor, weight: Tensor, bias: Tensor) -> Tuple[Tensor, Dict[str, Any]]:
    """W.x + b for a vector or an (N, in) batch."""
    if x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"input length {x.shape[-1]} != weight columns {weight.shape[1]}")
    if bias.shape != (weight.shape[0],):
        raise ShapeError(f"bias length {bias.shape} != weight rows {weight.shape[0]}")
    return x @ weight.T + bias, {"x": x, "weight": weight}


def linear_backward(dout: Tensor, cache: Dict[str, Any]) -> Tuple[Tensor, Tensor, Tensor]:
    x, weight = cache["x"], cache["weight"]
    x2 = x.reshape(-1, x.shape[-1])
    d2 = dout.reshape(-1, dout.shape[-1])
    dx = (d2 @ weight).reshape(x.shape)
    return dx, d2.T @ x2, d2.sum(axis=0)


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    out, _ = linear_forward(x, weight, bias)
    return out


def relu_forward(x: Tensor) -> Tuple[Tensor, Dict[str, Any]]:
    return np.maximum(x, 0.0), {"mask": x > 0.0}


def relu_backward(dout: Tensor, cache: Dict[str, Any]) -> Tensor:
    # gradient at exactly zero is zero
    return dout * cache["mask"]


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0.0)


# --------------------------------------------------------------------------
# Stateful layer objects used by the network
# --------------------------------------------------------------------------

class Layer:
    """A layer holding its parameters, gradients and last forward cache."""

    def __init__(self) -> None:
        self.params: Dict[str, Tensor] = {}
        self.grads: Dict[str, Tensor] = {}
        self.buffers: Dict[str, Tensor] = {}
        self._cache: Optional[Dict[str, Any]] = None

    def forward(self, x: Tensor, training: bool = True) -> Tensor:
        raise NotImplementedError

    def backward(self, dout: Tensor) -> Tensor:
        raise NotImplementedError

    def _require_cache(self) -> Dict[str, Any]:
        if self._cache is None:
            raise RuntimeError(f"{type(self).__name__}.backward called before forward")
        return self._cache

    def zero_grad(self) -> None:
        self.grads = {name: np.zeros_like(p) for name, p in self.params.items()}


class Conv2d(Layer):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        fan_in = in_channels * kernel_size * kernel_size
        self.params["weight"] = init_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        self.params["bias"] = init_uniform(rng, (out_channels,), fan_in)
        self.stride = stride
        self.padding = padding
        self.zero_grad()

    def forward(self, x: Tensor, training: bool = True) -> Tensor:
        out, self._cache = conv2d_forward(x, self.params["weight"], self.params["bias"], self.stride, self.padding)
        return out

    def backward(self, dout: Tensor) -> Tensor:
        dx, self.grads["weight"], self.grads["bias"] = conv2d_backward(dout, self._require_cache())
        return dx


class MaxPool2(Layer):
    def __init__(self, floor: bool = False):
        super().__init__()
        self.floor = floor

    def forward(self, x: Tensor, training: bool = True) -> Tensor:
        out, self._cache = maxpool2_forward(x, self.floor)
        return out

    def backward(self, dout: Tensor) -> Tensor:
        return maxpool2_backward(dout, self._require_cache())


class BatchNorm2d(Layer):
    def __init__(self, channels: int, momentum: float = BN_MOMENTUM, eps: float = BN_EPSILON):
        super().__init__()
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)
        self.momentum = momentum
        self.eps = eps
        self.zero_grad()

    def forward(self, x: Tensor, training: bool = True) -> Tensor:
        out, self._cache = batchnorm_forward(
            x,
            self.params["gamma"],
            self.params["beta"],
            self.buffers["running_mean"],
            self.buffers["running_var"],
            training,
            self.momentum,
            self.eps,
        )
        return out

    def backward(self, dout: Tensor) -> Tensor:
        dx, self.grads["gamma"], self.grads["beta"] = batchnorm_backward(dout, self._require_cache())
        return dx


class Linear(Layer):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.params["weight"] = init_uniform(rng, (out_features, in_features), in_features)
        self.params["bias"] = init_uniform(rng, (out_features,), in_features)
        self.zero_grad()

    def forward(self, x: Tensor, training: bool = True) -> Tensor:
        out, self._cache = linear_forward(x, self.params["weight"], self.params["bias"])
        return out

    def backward(self, dout: Tensor) -> Tensor:
        dx, self.grads["weight"], self.grads["bias"] = linear_backward(dout, self._require_cache())
        return dx


class ReLU(Layer):
    def forward(self, x: Tensor, training: bool = True) -> Tensor:
        out, self._cache = relu_forward(x)
        return out

    def backward(self, dout: Tensor) -> Tensor:
        return relu_backward(dout, self._require_cache())
