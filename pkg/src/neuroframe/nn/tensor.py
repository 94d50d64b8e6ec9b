"""Reverse-mode differentiation over numpy arrays.

A :class:`Tensor` records the op that produced it (``_parents`` plus a
closure mapping the output gradient to parent gradients). ``backward``
walks the graph in reverse topological order. Ops are plain functions in
this module; layers in :mod:`neuroframe.nn.layers` compose them.
"""

import numpy as np

from ..errors import ShapeError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents if self.requires_grad else ()
        self._backward = _backward if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if not self.requires_grad:
            return
        self.grad = g if self.grad is None else self.grad + g

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _data(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def add(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} differ")
    return Tensor(a.data + b.data, _parents=(a, b), _backward=lambda g: (g, g))


def shift(x, c):
    """``x + c`` for a constant array ``c`` broadcast over the leading axes."""
    c = _data(c)
    if x.shape[x.data.ndim - c.ndim:] != c.shape:
        raise ShapeError(f"shift: constant {c.shape} does not match trailing axes of {x.shape}")
    return Tensor(x.data + c, _parents=(x,), _backward=lambda g: (g,))


def scale(x, factor):
    """``x * factor`` for a fixed scalar."""
    factor = float(factor)
    return Tensor(x.data * np.asarray(factor, x.data.dtype), _parents=(x,),
                  _backward=lambda g: (g * np.asarray(factor, g.dtype),))


def relu(x):
    mask = x.data > 0
    return Tensor(np.where(mask, x.data, 0).astype(x.dtype, copy=False), _parents=(x,),
                  _backward=lambda g: (g * mask,))


def reshape(x, shape):
    src = x.shape
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {src} to {shape}") from exc
    return Tensor(out, _parents=(x,), _backward=lambda g: (g.reshape(src),))


def dense(x, W, b):
    """Affine map over the last axis: ``x @ W + b``."""
    f_in, units = W.shape
    if x.shape[-1] != f_in:
        raise ShapeError(f"dense: input features {x.shape[-1]} != kernel rows {f_in}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, f_in)
    out = (x2 @ W.data + b.data).reshape(lead + (units,))

    def backward(g):
        g2 = g.reshape(-1, units)
        return ((g2 @ W.data.T).reshape(lead + (f_in,)), x2.T @ g2, g2.sum(axis=0))

    return Tensor(out, _parents=(x, W, b), _backward=backward)


def causal_conv1d(x, W, b, dilation=1):
    """Dilated causal convolution over time; x (B, T, Cin), W (K, Cin, Cout)."""
    k, c_in, c_out = W.shape
    if x.data.ndim != 3 or x.shape[-1] != c_in:
        raise ShapeError(f"causal_conv1d: expected (B, T, {c_in}), got {x.shape}")
    if dilation < 1:
        raise ShapeError(f"dilation must be >= 1, got {dilation}")
    B, T, _ = x.shape
    pad = (k - 1) * dilation
    xp = np.pad(x.data, ((0, 0), (pad, 0), (0, 0)))
    out = np.broadcast_to(b.data, (B, T, c_out)).copy()
    for i in range(k):
        out += xp[:, i * dilation:i * dilation + T, :] @ W.data[i]

    def backward(g):
        gxp = np.zeros_like(xp)
        gW = np.empty_like(W.data)
        g2 = g.reshape(-1, c_out)
        for i in range(k):
            sl = xp[:, i * dilation:i * dilation + T, :]
            gW[i] = sl.reshape(-1, c_in).T @ g2
            gxp[:, i * dilation:i * dilation + T, :] += g @ W.data[i].T
        return gxp[:, pad:, :], gW, g2.sum(axis=0)

    return Tensor(out, _parents=(x, W, b), _backward=backward)


def _same_pads(k):
    before = (k - 1) // 2
    return before, k - 1 - before


def conv2d(x, W, b):
    """Stride-1 'same' cross-correlation over axes (1, 2) of a channels-last input.

    x (B, T, H, C), W (kh, kw, C, F) -> (B, T, H, F).
    """
    kh, kw, c_in, c_out = W.shape
    if x.data.ndim != 4 or x.shape[-1] != c_in:
        raise ShapeError(f"conv2d: expected (B, T, H, {c_in}), got {x.shape}")
    B, T, H, _ = x.shape
    pt, ph = _same_pads(kh), _same_pads(kw)
    if T + sum(pt) < kh or H + sum(ph) < kw:
        raise ShapeError(f"conv2d: kernel {(kh, kw)} larger than padded input {(T, H)}")
    xp = np.pad(x.data, ((0, 0), pt, ph, (0, 0))) if (kh > 1 or kw > 1) else x.data
    out = np.broadcast_to(b.data, (B, T, H, c_out)).copy()
    for i in range(kh):
        for j in range(kw):
            out += xp[:, i:i + T, j:j + H, :] @ W.data[i, j]

    def backward(g):
        gxp = np.zeros_like(xp)
        gW = np.empty_like(W.data)
        g2 = g.reshape(-1, c_out)
        for i in range(kh):
            for j in range(kw):
                sl = xp[:, i:i + T, j:j + H, :]
                gW[i, j] = sl.reshape(-1, c_in).T @ g2
                gxp[:, i:i + T, j:j + H, :] += g @ W.data[i, j].T
        return gxp[:, pt[0]:pt[0] + T, ph[0]:ph[0] + H, :], gW, g2.sum(axis=0)

    return Tensor(out, _parents=(x, W, b), _backward=backward)


def conv2d_transpose_1x1(x, W, b):
    """Transposed convolution with a (1, 1) kernel and stride 1.

    W has the transposed layout (1, 1, F, C): output channel f at a position
    is ``sum_c W[0, 0, f, c] * x[..., c] + b[f]``, i.e. the adjoint of a 1x1
    convolution with kernel ``W[0, 0].T``.
    """
    if W.shape[:2] != (1, 1):
        raise ShapeError(f"only (1, 1) transposed kernels are supported, got {W.shape[:2]}")
    _, _, c_out, c_in = W.shape
    if x.shape[-1] != c_in:
        raise ShapeError(f"conv2d_transpose: input channels {x.shape[-1]} != {c_in}")
    k = W.data[0, 0]
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, c_in)
    out = (x2 @ k.T + b.data).reshape(lead + (c_out,))

    def backward(g):
        g2 = g.reshape(-1, c_out)
        gW = (g2.T @ x2)[None, None]
        return (g2 @ k).reshape(lead + (c_in,)), gW, g2.sum(axis=0)

    return Tensor(out, _parents=(x, W, b), _backward=backward)


def maxpool2d(x, pool):
    """Non-overlapping max pooling over axes (1, 2); ties go to the first index."""
    ph, pw = pool
    if x.data.ndim != 4:
        raise ShapeError(f"maxpool2d: expected 4-D input, got {x.shape}")
    B, T, H, C = x.shape
    if T < ph or H < pw:
        raise ShapeError(f"maxpool2d: pool {pool} larger than input {(T, H)}")
    To, Ho = T // ph, H // pw
    crop = x.data[:, :To * ph, :Ho * pw, :]
    win = crop.reshape(B, To, ph, Ho, pw, C).transpose(0, 1, 3, 5, 2, 4).reshape(B, To, Ho, C, ph * pw)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        gwin = np.zeros(win.shape, dtype=g.dtype)
        np.put_along_axis(gwin, arg[..., None], g[..., None], axis=-1)
        gcrop = gwin.reshape(B, To, Ho, C, ph, pw).transpose(0, 1, 4, 2, 5, 3).reshape(crop.shape)
        if crop.shape == x.shape:
            return (gcrop,)
        gx = np.zeros(x.shape, dtype=g.dtype)
        gx[:, :To * ph, :Ho * pw, :] = gcrop
        return (gx,)

    return Tensor(out, _parents=(x,), _backward=backward)


def upsample2d(x, size):
    """Nearest-neighbour repetition along axes (1, 2)."""
    sh, sw = size
    if sh < 1 or sw < 1:
        raise ShapeError(f"upsample size must be >= 1, got {size}")
    if (sh, sw) == (1, 1):
        return Tensor(x.data, _parents=(x,), _backward=lambda g: (g,))
    B, T, H, C = x.shape
    out = np.repeat(np.repeat(x.data, sh, axis=1), sw, axis=2)

    def backward(g):
        return (g.reshape(B, T, sh, H, sw, C).sum(axis=(2, 4)),)

    return Tensor(out, _parents=(x,), _backward=backward)


def mse_loss(pred, truth):
    """Mean of squared differences over every element."""
    t = _data(truth)
    if pred.shape != t.shape:
        raise ShapeError(f"mse_loss: prediction {pred.shape} vs truth {t.shape}")
    diff = pred.data - t.astype(pred.dtype, copy=False)
    n = diff.size
    loss = np.asarray(np.mean(diff * diff), dtype=pred.dtype)
    scale = pred.dtype.type(2.0 / n)
    return Tensor(loss, _parents=(pred,), _backward=lambda g: (diff * (g * scale),))


def weighted_sum(x, w):
    """``sum(x * w)`` for a constant array ``w``; reduces outputs to a scalar."""
    w = np.asarray(w, dtype=x.dtype)
    return Tensor(np.asarray(np.sum(x.data * w)), _parents=(x,), _backward=lambda g: (g * w,))
