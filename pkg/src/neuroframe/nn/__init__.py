"""Minimal reverse-mode autodiff and the layer set used by the two models."""

from .tensor import (Tensor, add, relu, reshape, dense, causal_conv1d, conv2d,
                     conv2d_transpose_1x1, maxpool2d, upsample2d, mse_loss, weighted_sum, shift, scale)
from .layers import (Parameter, Layer, DenseTD, TCN, Conv2D, Conv2DTranspose, MaxPool2D,
                     UpSampling2D, ReLU, Reshape, FlattenTD, Offset, Rescale, Sequential)
from .optim import Adam, adam_step
from .gradcheck import grad_check

__all__ = [
    "Tensor", "add", "relu", "reshape", "dense", "causal_conv1d", "conv2d",
    "conv2d_transpose_1x1", "maxpool2d", "upsample2d", "mse_loss", "weighted_sum", "shift", "scale",
    "Parameter", "Layer", "DenseTD", "TCN", "Conv2D", "Conv2DTranspose", "MaxPool2D",
    "UpSampling2D", "ReLU", "Reshape", "FlattenTD", "Offset", "Rescale", "Sequential", "Adam", "adam_step",
    "grad_check",
]
