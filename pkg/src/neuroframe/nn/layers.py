"""Layers, parameters and a sequential container.

Shapes are channels-last and written without the batch axis; ``None``
marks a free extent (the time axis). Every layer validates its input shape
when the model is built so architecture mistakes surface before any data
is pushed through.
"""

import math

import numpy as np

from ..errors import ShapeError, UsageError
from . import tensor as T
from .tensor import Tensor


class Parameter(Tensor):
    __slots__ = ("name", "adam_m", "adam_v", "step_count")

    def __init__(self, name, data):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.adam_m = np.zeros_like(self.data)
        self.adam_v = np.zeros_like(self.data)
        self.step_count = 0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


def he_uniform(rng, shape, fan_in, dtype):
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def glorot_uniform(rng, shape, fan_in, fan_out, dtype):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def _init(rng, shape, fan_in, fan_out, activation, dtype):
    if activation == "relu":
        return he_uniform(rng, shape, fan_in, dtype)
    return glorot_uniform(rng, shape, fan_in, fan_out, dtype)


def _check_activation(act):
    if act not in ("linear", "relu"):
        raise UsageError(f"unsupported activation {act!r}")
    return act


def _activate(x, act):
    return T.relu(x) if act == "relu" else x


class Layer:
    kind = "layer"

    def __init__(self, name=None):
        self.name = name
        self.params = []
        self.buffers = {}  # fixed (non-trained) state saved with the weights

    def build(self, in_shape, rng, dtype):
        """Create parameters for ``in_shape`` and return the output shape."""
        return in_shape

    def __call__(self, x):
        return self.forward(x)

    def spec(self):
        return {"kind": self.kind}

    def _param(self, suffix, data):
        p = Parameter(f"{self.name}.{suffix}", data)
        self.params.append(p)
        return p

    def _buffer(self, suffix, data):
        t = Tensor(data)
        self.buffers[f"{self.name}.{suffix}"] = t
        return t


class DenseTD(Layer):
    """Same affine map at every leading position, over the last axis."""

    kind = "dense_td"

    def __init__(self, units, activation="linear", name=None):
        super().__init__(name)
        if units < 1:
            raise UsageError(f"units must be >= 1, got {units}")
        self.units = units
        self.activation = _check_activation(activation)

    def build(self, in_shape, rng, dtype):
        f = in_shape[-1]
        if f is None:
            raise ShapeError(f"{self.name}: last axis must be known")
        self.kernel = self._param("kernel", _init(rng, (f, self.units), f, self.units, self.activation, dtype))
        self.bias = self._param("bias", np.zeros(self.units, dtype))
        return in_shape[:-1] + (self.units,)

    def forward(self, x):
        return _activate(T.dense(x, self.kernel, self.bias), self.activation)

    def spec(self):
        return {"kind": self.kind, "units": self.units, "activation": self.activation}


class TCN(Layer):
    """Residual stack of dilated causal convolutions over (B, T, C).

    One residual block per dilation. A block is two causal convolutions with
    ReLU after each, added to the block input (through a 1x1 projection when
    the channel count changes), followed by ``block_activation``.
    """

    kind = "tcn"

    def __init__(self, filters=128, kernel_size=3, dilations=(1, 2), block_activation="relu",
                 name=None):
        super().__init__(name)
        if filters < 1 or kernel_size < 1:
            raise UsageError("filters and kernel_size must be >= 1")
        if not dilations or any(int(d) < 1 for d in dilations):
            raise UsageError(f"dilations must be positive integers, got {dilations}")
        self.filters = filters
        self.kernel_size = kernel_size
        self.dilations = tuple(int(d) for d in dilations)
        self.block_activation = _check_activation(block_activation)

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 2 or in_shape[-1] is None:
            raise ShapeError(f"{self.name}: expected (T, C) input, got {in_shape}")
        c = in_shape[-1]
        k, f = self.kernel_size, self.filters
        self.blocks = []
        for i, d in enumerate(self.dilations):
            w1 = self._param(f"block{i}.conv1.kernel", he_uniform(rng, (k, c, f), k * c, dtype))
            b1 = self._param(f"block{i}.conv1.bias", np.zeros(f, dtype))
            w2 = self._param(f"block{i}.conv2.kernel", he_uniform(rng, (k, f, f), k * f, dtype))
            b2 = self._param(f"block{i}.conv2.bias", np.zeros(f, dtype))
            proj = None
            if c != f:
                pw = self._param(f"block{i}.proj.kernel", glorot_uniform(rng, (c, f), c, f, dtype))
                pb = self._param(f"block{i}.proj.bias", np.zeros(f, dtype))
                proj = (pw, pb)
            self.blocks.append((d, w1, b1, w2, b2, proj))
            c = f
        return (in_shape[0], f)

    def forward(self, x):
        for d, w1, b1, w2, b2, proj in self.blocks:
            h = T.relu(T.causal_conv1d(x, w1, b1, d))
            h = T.relu(T.causal_conv1d(h, w2, b2, d))
            res = T.dense(x, *proj) if proj else x
            x = _activate(T.add(h, res), self.block_activation)
        return x

    def spec(self):
        return {"kind": self.kind, "filters": self.filters, "kernel_size": self.kernel_size,
                "dilations": list(self.dilations), "block_activation": self.block_activation}


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(self, filters, kernel_size, activation="relu", name=None):
        super().__init__(name)
        self.filters = filters
        self.kernel_size = tuple(kernel_size)
        self.activation = _check_activation(activation)

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 3 or in_shape[-1] is None:
            raise ShapeError(f"{self.name}: expected (T, H, C) input, got {in_shape}")
        _, h, c = in_shape
        kh, kw = self.kernel_size
        if kh < 1 or kw < 1 or (h is not None and h < 1):
            raise ShapeError(f"{self.name}: bad kernel {self.kernel_size} for input {in_shape}")
        fan_in = kh * kw * c
        self.kernel = self._param("kernel", _init(rng, (kh, kw, c, self.filters), fan_in,
                                                   kh * kw * self.filters, self.activation, dtype))
        self.bias = self._param("bias", np.zeros(self.filters, dtype))
        return in_shape[:-1] + (self.filters,)

    def forward(self, x):
        return _activate(T.conv2d(x, self.kernel, self.bias), self.activation)

    def spec(self):
        return {"kind": self.kind, "filters": self.filters,
                "kernel_size": list(self.kernel_size), "activation": self.activation}


class Conv2DTranspose(Layer):
    kind = "conv2d_transpose"

    def __init__(self, filters, kernel_size=(1, 1), strides=(1, 1), activation="relu", name=None):
        super().__init__(name)
        if tuple(kernel_size) != (1, 1) or tuple(strides) != (1, 1):
            raise UsageError("only kernel (1, 1) with stride (1, 1) is supported")
        self.filters = filters
        self.activation = _check_activation(activation)

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 3 or in_shape[-1] is None:
            raise ShapeError(f"{self.name}: expected (T, H, C) input, got {in_shape}")
        c = in_shape[-1]
        self.kernel = self._param("kernel", _init(rng, (1, 1, self.filters, c), c, self.filters,
                                                   self.activation, dtype))
        self.bias = self._param("bias", np.zeros(self.filters, dtype))
        return in_shape[:-1] + (self.filters,)

    def forward(self, x):
        return _activate(T.conv2d_transpose_1x1(x, self.kernel, self.bias), self.activation)

    def spec(self):
        return {"kind": self.kind, "filters": self.filters, "kernel_size": [1, 1],
                "activation": self.activation}


class MaxPool2D(Layer):
    kind = "maxpool2d"

    def __init__(self, pool_size=(1, 2), name=None):
        super().__init__(name)
        self.pool_size = tuple(pool_size)
        if min(self.pool_size) < 1:
            raise UsageError(f"pool size must be >= 1, got {pool_size}")

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 3:
            raise ShapeError(f"{self.name}: expected (T, H, C) input, got {in_shape}")
        t, h, c = in_shape
        ph, pw = self.pool_size
        if h is not None and h < pw:
            raise ShapeError(f"{self.name}: height {h} smaller than pool width {pw}")
        return (None if t is None else t // ph, None if h is None else h // pw, c)

    def forward(self, x):
        return T.maxpool2d(x, self.pool_size)

    def spec(self):
        return {"kind": self.kind, "pool_size": list(self.pool_size)}


class UpSampling2D(Layer):
    kind = "upsample2d"

    def __init__(self, size=(1, 1), name=None):
        super().__init__(name)
        self.size = tuple(size)
        if min(self.size) < 1:
            raise UsageError(f"upsampling size must be >= 1, got {size}")

    def build(self, in_shape, rng, dtype):
        t, h, c = in_shape
        sh, sw = self.size
        return (None if t is None else t * sh, None if h is None else h * sw, c)

    def forward(self, x):
        return T.upsample2d(x, self.size)

    def spec(self):
        return {"kind": self.kind, "size": list(self.size)}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        return T.relu(x)


class Reshape(Layer):
    """Reshape the per-tick extents, keeping (B, T)."""

    kind = "reshape"

    def __init__(self, target, name=None):
        super().__init__(name)
        self.target = tuple(target)

    def build(self, in_shape, rng, dtype):
        if math.prod(in_shape[1:]) != math.prod(self.target):
            raise ShapeError(f"{self.name}: cannot reshape {in_shape[1:]} to {self.target}")
        return (in_shape[0],) + self.target

    def forward(self, x):
        return T.reshape(x, x.shape[:2] + self.target)

    def spec(self):
        return {"kind": self.kind, "target": list(self.target)}


class FlattenTD(Layer):
    """Flatten everything after (B, T) into one feature axis."""

    kind = "flatten_td"

    def build(self, in_shape, rng, dtype):
        rest = in_shape[1:]
        if any(e is None for e in rest):
            raise ShapeError(f"{self.name}: per-tick extents must be known, got {in_shape}")
        return (in_shape[0], math.prod(rest))

    def forward(self, x):
        return T.reshape(x, x.shape[:2] + (-1,))


class Rescale(Layer):
    """Multiplies by a fixed factor, e.g. 1/255 to bring pixels into [0, 1]."""

    kind = "rescale"

    def __init__(self, factor, name=None):
        super().__init__(name)
        self.factor = float(factor)

    def spec(self):
        return {"kind": self.kind, "factor": self.factor}

    def forward(self, x):
        return T.scale(x, self.factor)


class Offset(Layer):
    """Adds a fixed per-item constant, set from training targets by ``adapt``.

    Used as the last e2v layer: the network learns deviations from the mean
    training frame while its output stays in raw pixel units.
    """

    kind = "offset"

    def build(self, in_shape, rng, dtype):
        item = in_shape[1:]
        if any(e is None for e in item):
            raise ShapeError(f"{self.name}: per-tick extents must be known, got {in_shape}")
        self.value = self._buffer("value", np.zeros(item, dtype))
        return in_shape

    def adapt(self, targets):
        t = np.asarray(targets)
        item = self.value.shape
        if t.shape[t.ndim - len(item):] != item:
            raise ShapeError(f"{self.name}: targets {t.shape} do not end in {item}")
        mean = t.reshape((-1,) + item).mean(axis=0, dtype=np.float64)
        self.value.data = mean.astype(self.value.dtype)

    def forward(self, x):
        return T.shift(x, self.value.data)


class Sequential:
    """Layers applied in order to inputs shaped (B, T, ...)."""

    def __init__(self, layers, input_shape, seed=0, dtype=np.float32, arch=""):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.arch = arch
        rng = np.random.default_rng(seed)
        shape = self.input_shape
        counts = {}
        for layer in self.layers:
            if layer.name is None:
                counts[layer.kind] = counts.get(layer.kind, 0) + 1
                layer.name = f"{layer.kind}_{counts[layer.kind]}"
            shape = layer.build(shape, rng, self.dtype)
        self.output_shape = shape
        names = [p.name for p in self.parameters()] + list(self.buffers())
        if len(set(names)) != len(names):
            raise UsageError("parameter names must be unique within a model")

    def parameters(self):
        return [p for layer in self.layers for p in layer.params]

    def n_params(self):
        return sum(p.data.size for p in self.parameters())

    def buffers(self):
        return {name: t for layer in self.layers for name, t in layer.buffers.items()}

    def _tensors(self):
        out = {}
        for layer in self.layers:
            out.update((p.name, p) for p in layer.params)
            out.update(layer.buffers)
        return out

    def state_dict(self):
        """Trainable parameters and fixed buffers, in layer order."""
        return {name: t.data for name, t in self._tensors().items()}

    def load_state_dict(self, state):
        tensors = self._tensors()
        if set(tensors) != set(state):
            missing = sorted(set(tensors) ^ set(state))
            raise ShapeError(f"parameter sets differ: {missing[:5]}")
        for name, arr in state.items():
            t = tensors[name]
            if t.data.shape != np.shape(arr):
                raise ShapeError(f"{name}: expected {t.data.shape}, got {np.shape(arr)}")
            t.data = np.array(arr, dtype=self.dtype)

    def adapt(self, targets):
        """Fit every adaptable layer (e.g. :class:`Offset`) to training targets."""
        for layer in self.layers:
            if hasattr(layer, "adapt"):
                layer.adapt(targets)

    def astype(self, dtype):
        """Switch every parameter (and optimizer moment) to ``dtype`` in place."""
        self.dtype = np.dtype(dtype)
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.adam_m = p.adam_m.astype(dtype)
            p.adam_v = p.adam_v.astype(dtype)
        for t in self.buffers().values():
            t.data = t.data.astype(dtype)
        return self

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def check_input(self, shape):
        shape = tuple(shape)
        if len(shape) != len(self.input_shape) + 1:
            raise ShapeError(f"expected input of rank {len(self.input_shape) + 1}, got {shape}")
        for want, got in zip(self.input_shape, shape[1:]):
            if want is not None and want != got:
                raise ShapeError(f"expected input (B, {self.input_shape}) got {shape}")

    def __call__(self, x):
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=self.dtype))
        self.check_input(x.shape)
        for layer in self.layers:
            x = layer(x)
        return x

    def spec(self):
        return {"arch": self.arch, "input_shape": list(self.input_shape), "seed": self.seed,
                "layers": [layer.spec() for layer in self.layers]}
