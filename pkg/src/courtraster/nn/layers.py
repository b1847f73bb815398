"""Differentiable layer primitives on plain numpy arrays.

Layers are small stateful objects: ``forward`` caches whatever the matching
``backward`` needs, parameters live in an external name -> array dict so the
same layer graph can run in float32 (training) or float64 (gradient checks).

Spatial activations flow through the trunk channels-last, (N, H, W, C); the
Network converts from the public (N, C, H, W) layout at its boundary. That
keeps the im2col patch copies and the pooling reductions on contiguous axes.
Convolution runs as im2col + gemm; its input gradient is the transposed
convolution as nine shifted gemms, so there are no scatter-adds on the hot
path. Backward passes accumulate parameter gradients into a grads dict and
return the input gradient.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Input shape does not match the layer contract."""


def _colsum(flat: np.ndarray) -> np.ndarray:
    """Column sums as float64. float32 inputs accumulate pairwise in float32
    first (a fast vectorized pass; relative error ~1e-6, well inside the
    batch-norm tolerances) and widen after."""
    if flat.dtype == np.float32:
        return flat.sum(axis=0).astype(np.float64)
    return flat.sum(axis=0, dtype=np.float64)


def _im2col3x3(x: np.ndarray) -> np.ndarray:
    """(N, H, W, C) -> (N*H*W, 9*C) patch matrix for 3x3, stride 1, pad 1.
    Patch axis order is (ki, kj, c)."""
    n, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = np.empty((n, h, w, 3, 3, c), dtype=x.dtype)
    for i in range(3):
        for j in range(3):
            cols[:, :, :, i, j, :] = xp[:, i : i + h, j : j + w, :]
    return cols.reshape(n * h * w, 9 * c)


class Conv3x3:
    """3x3 convolution (cross-correlation), stride 1, pad 1, so H and W are
    preserved. Weights (F, C, 3, 3), bias (F,)."""

    def __init__(self, prefix: str, in_channels: int, filters: int):
        self.prefix = prefix
        self.in_channels = in_channels
        self.filters = filters
        self.w_name = f"{prefix}.w"
        self.b_name = f"{prefix}.b"
        self._shape = None
        self._cols = None

    def param_shapes(self):
        return {
            self.w_name: (self.filters, self.in_channels, 3, 3),
            self.b_name: (self.filters,),
        }

    def fan_in(self) -> int:
        return self.in_channels * 9

    def _wmat(self, params):
        # (F, C, 3, 3) -> (9C, F) matching the (ki, kj, c) patch order
        return np.ascontiguousarray(
            params[self.w_name].transpose(2, 3, 1, 0).reshape(9 * self.in_channels, self.filters)
        )

    def forward(self, x, params, train):
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise ShapeError(
                f"{self.prefix}: expected (N, H, W, {self.in_channels}), got {x.shape}"
            )
        self._shape = x.shape
        n, h, w, _ = x.shape
        self._cols = _im2col3x3(x)
        out = self._cols @ self._wmat(params) + params[self.b_name]
        return out.reshape(n, h, w, self.filters)

    def backward(self, dout, params, grads):
        n, h, w, c = self._shape
        f = self.filters
        dmat = dout.reshape(n * h * w, f)
        dw_t = dmat.T @ self._cols  # (F, 9C)
        dw = np.ascontiguousarray(dw_t.reshape(f, 3, 3, c).transpose(0, 3, 1, 2))
        db = dmat.sum(axis=0)
        self._cols = None

        # input gradient: the transposed convolution, as nine shifted gemms
        # into a padded accumulator
        wk = params[self.w_name]
        acc = np.zeros((n, h + 2, w + 2, c), dtype=dout.dtype)
        for i in range(3):
            for j in range(3):
                part = dmat @ np.ascontiguousarray(wk[:, :, i, j])
                acc[:, i : i + h, j : j + w, :] += part.reshape(n, h, w, c)
        dx = np.ascontiguousarray(acc[:, 1 : h + 1, 1 : w + 1, :])
        grads[self.w_name] = grads.get(self.w_name, 0) + dw
        grads[self.b_name] = grads.get(self.b_name, 0) + db
        return dx


class MaxPool2:
    """2x2 max pooling, stride 2, channels-last. Odd extents are padded with
    -inf so the output is ceil(H/2) x ceil(W/2); the gradient routes to the
    first maximal element of each window (row-major within the window)."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self._shape = None
        self._windows = None
        self._out = None

    def param_shapes(self):
        return {}

    @staticmethod
    def out_hw(h: int, w: int) -> tuple[int, int]:
        return (h + 1) // 2, (w + 1) // 2

    def forward(self, x, params, train):
        if x.ndim != 4:
            raise ShapeError(f"{self.prefix}: expected (N, H, W, C), got {x.shape}")
        n, h, w, c = x.shape
        self._shape = x.shape
        hp, wp = h + h % 2, w + w % 2
        if (hp, wp) != (h, w):
            xpad = np.full((n, hp, wp, c), -np.inf, dtype=x.dtype)
            xpad[:, :h, :w, :] = x
        else:
            xpad = x
        win = xpad.reshape(n, hp // 2, 2, wp // 2, 2, c)
        out = win.max(axis=4).max(axis=2)
        self._windows = win
        self._out = out
        return out

    def backward(self, dout, params, grads):
        n, h, w, c = self._shape
        hp, wp = h + h % 2, w + w % 2
        win = self._windows
        dpad = np.zeros((n, hp // 2, 2, wp // 2, 2, c), dtype=dout.dtype)
        taken = np.zeros(self._out.shape, dtype=bool)
        for i in range(2):
            for j in range(2):
                hit = (win[:, :, i, :, j, :] == self._out) & ~taken
                dpad[:, :, i, :, j, :] = np.where(hit, dout, 0)
                taken |= hit
        dpad = dpad.reshape(n, hp, wp, c)
        return dpad[:, :h, :w, :] if (hp, wp) != (h, w) else dpad


class Dense:
    def __init__(self, prefix: str, in_dim: int, out_dim: int):
        self.prefix = prefix
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.w_name = f"{prefix}.w"
        self.b_name = f"{prefix}.b"
        self._x = None

    def param_shapes(self):
        return {self.w_name: (self.in_dim, self.out_dim), self.b_name: (self.out_dim,)}

    def fan_in(self) -> int:
        return self.in_dim

    def forward(self, x, params, train):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"{self.prefix}: expected (N, {self.in_dim}), got {x.shape}")
        self._x = x
        return x @ params[self.w_name] + params[self.b_name]

    def backward(self, dout, params, grads):
        grads[self.w_name] = grads.get(self.w_name, 0) + self._x.T @ dout
        grads[self.b_name] = grads.get(self.b_name, 0) + dout.sum(axis=0)
        dx = dout @ params[self.w_name].T
        self._x = None
        return dx


class ReLU:
    def __init__(self, prefix: str):
        self.prefix = prefix
        self._mask = None

    def param_shapes(self):
        return {}

    def forward(self, x, params, train):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout, params, grads):
        return dout * self._mask


class Flatten:
    def __init__(self, prefix: str):
        self.prefix = prefix
        self._shape = None

    def param_shapes(self):
        return {}

    def forward(self, x, params, train):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout, params, grads):
        return dout.reshape(self._shape)


class BatchNorm:
    """Batch normalization: per channel for 4-d inputs, per feature for 2-d.

    Training normalizes with batch statistics (eps 1e-5) and refreshes the
    running estimates with momentum 0.9; evaluation uses the running
    statistics. A training batch of one sample has undefined variance and is
    rejected."""

    EPS = 1e-5
    MOMENTUM = 0.9

    def __init__(self, prefix: str, channels: int, conv: bool):
        self.prefix = prefix
        self.channels = channels
        self.conv = conv
        self.g_name = f"{prefix}.gamma"
        self.b_name = f"{prefix}.beta"
        self.rm_name = f"{prefix}.running_mean"
        self.rv_name = f"{prefix}.running_var"
        self._cache = None

    def param_shapes(self):
        c = (self.channels,)
        return {self.g_name: c, self.b_name: c, self.rm_name: c, self.rv_name: c}

    def _axes(self):
        return (0, 1, 2) if self.conv else (0,)

    def _expand(self, v, ndim):
        # channel axis is last in both layouts, so plain broadcasting works
        return v

    def forward(self, x, params, train):
        want = 4 if self.conv else 2
        if x.ndim != want or x.shape[-1] != self.channels:
            raise ShapeError(f"{self.prefix}: expected {want}-d input with {self.channels} channels")
        axes = self._axes()
        if train:
            if x.shape[0] == 1:
                raise ValueError(f"{self.prefix}: batch of 1 has undefined variance in train mode")
            m = x.shape[0] if not self.conv else x.shape[0] * x.shape[1] * x.shape[2]
            flat = x.reshape(-1, self.channels)
            mean = _colsum(flat) / m
            var = _colsum(flat * flat) / m - mean * mean
            np.maximum(var, 0.0, out=var)
            pdtype = params[self.rm_name].dtype
            params[self.rm_name] = (
                self.MOMENTUM * params[self.rm_name] + (1 - self.MOMENTUM) * mean
            ).astype(pdtype)
            params[self.rv_name] = (
                self.MOMENTUM * params[self.rv_name] + (1 - self.MOMENTUM) * var
            ).astype(pdtype)
        else:
            mean = params[self.rm_name].astype(np.float64)
            var = params[self.rv_name].astype(np.float64)
        inv = 1.0 / np.sqrt(var + self.EPS)
        res_dtype = np.result_type(x.dtype, params[self.g_name].dtype)
        mean_c = self._expand(mean.astype(res_dtype), x.ndim)
        inv_c = self._expand(inv.astype(res_dtype), x.ndim)
        xhat = x - mean_c
        xhat *= inv_c
        self._cache = (xhat, inv.astype(res_dtype), train)
        out = xhat * self._expand(params[self.g_name], x.ndim)
        out += self._expand(params[self.b_name], x.ndim)
        return out

    def backward(self, dout, params, grads):
        xhat, inv, train = self._cache
        c = self.channels
        dflat = dout.reshape(-1, c)
        dgamma = _colsum(dflat * xhat.reshape(-1, c))
        dbeta = _colsum(dflat)
        pdtype = params[self.g_name].dtype
        grads[self.g_name] = grads.get(self.g_name, 0) + dgamma.astype(pdtype)
        grads[self.b_name] = grads.get(self.b_name, 0) + dbeta.astype(pdtype)

        res_dtype = dout.dtype
        g = params[self.g_name]
        if not train:
            return (dout * (g * inv)).astype(res_dtype, copy=False)
        m = dflat.shape[0]
        sum_dout = dbeta.astype(res_dtype)
        sum_dx_hat = dgamma.astype(res_dtype)
        dx = (g * inv / m) * (m * dout - sum_dout - xhat * sum_dx_hat)
        self._cache = None
        return dx.astype(res_dtype, copy=False)


class Standardize:
    """Frozen per-feature affine (x - mean) / std set from the training
    split. Not trainable; stored with the parameters so checkpoints carry
    the normalization."""

    def __init__(self, prefix: str, dim: int):
        self.prefix = prefix
        self.dim = dim
        self.m_name = f"{prefix}.mean"
        self.s_name = f"{prefix}.std"
        self._std = None

    def param_shapes(self):
        return {self.m_name: (self.dim,), self.s_name: (self.dim,)}

    def forward(self, x, params, train):
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ShapeError(f"{self.prefix}: expected (N, {self.dim}), got {x.shape}")
        self._std = params[self.s_name]
        return (x - params[self.m_name]) / self._std

    def backward(self, dout, params, grads):
        return dout / self._std


def softmax_logloss(logits: np.ndarray, labels: np.ndarray):
    """Stable softmax probabilities and per-sample log loss.

    Returns (probs (N, K) float64, losses (N,) float64, dlogits (N, K) in the
    logits dtype). dlogits is the gradient of the summed loss, i.e. y - t per
    sample; divide by N for a mean-loss objective.
    """
    z = logits.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    expz = np.exp(z)
    denom = expz.sum(axis=1, keepdims=True)
    probs = expz / denom
    n = logits.shape[0]
    losses = np.log(denom[:, 0]) - z[np.arange(n), labels]
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return probs, losses, dlogits.astype(logits.dtype)
