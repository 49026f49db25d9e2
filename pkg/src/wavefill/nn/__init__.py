"""Minimal differentiable tensor engine used by the WaveFill networks."""
from wavefill.nn.functional import (
    conv2d,
    dwt,
    gated_conv2d,
    idwt,
    max_pool2d,
    pono,
    upsample_nearest,
)
from wavefill.nn.module import Conv2d, GatedConv2d, Module, Parameter
from wavefill.nn.optim import Adam, AdamState, adam_step
from wavefill.nn.tensor import (
    Tensor,
    absolute,
    as_tensor,
    concat,
    elu,
    exp,
    leaky_relu,
    matmul,
    mean,
    no_grad,
    relu,
    sigmoid,
    softmax,
    sqrt,
    tsum,
)

__all__ = [
    "Adam", "AdamState", "Conv2d", "GatedConv2d", "Module", "Parameter", "Tensor",
    "absolute", "adam_step", "as_tensor", "concat", "conv2d", "dwt", "elu", "exp",
    "gated_conv2d", "idwt", "leaky_relu", "matmul", "max_pool2d", "mean", "no_grad",
    "pono", "relu", "sigmoid", "softmax", "sqrt", "tsum", "upsample_nearest",
]
