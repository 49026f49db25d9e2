"""Parameters, module containers and the two convolution layers."""
from __future__ import annotations

import numpy as np

from wavefill.nn import functional as F
from wavefill.nn.tensor import Tensor, elu


class Parameter(Tensor):
    def __init__(self, data, requires_grad: bool = True):
        super().__init__(np.array(data), requires_grad=requires_grad)


class Module:
    """Attribute-walking container; parameter names follow attribute order."""

    def named_parameters(self, prefix: str = ""):
        for key, value in vars(self).items():
            name = f"{prefix}.{key}" if prefix else key
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name)
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}")

    def parameters(self) -> list:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def cast(self, dtype) -> "Module":
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self

    def freeze(self) -> "Module":
        for p in self.parameters():
            p.requires_grad = False
        return self

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def uniform_fan_in(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv2d(Module):
    def __init__(self, rng, cin: int, cout: int, kernel: int = 3, stride: int = 1,
                 dilation: int = 1, padding: int | None = None, bias: bool = True,
                 dtype=np.float32):
        fan_in = cin * kernel * kernel
        self.weight = Parameter(uniform_fan_in(rng, (cout, cin, kernel, kernel), fan_in, dtype))
        self.bias = Parameter(uniform_fan_in(rng, (cout,), fan_in, dtype)) if bias else None
        self.stride = stride
        self.dilation = dilation
        self.padding = dilation * (kernel - 1) // 2 if padding is None else padding

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, self.stride, self.dilation, self.padding)


class GatedConv2d(Module):
    """Feature and gate convolutions with identical geometry."""

    def __init__(self, rng, cin: int, cout: int, kernel: int = 3, stride: int = 1,
                 dilation: int = 1, activation=elu, dtype=np.float32):
        self.feature = Conv2d(rng, cin, cout, kernel, stride, dilation, dtype=dtype)
        self.gate = Conv2d(rng, cin, cout, kernel, stride, dilation, dtype=dtype)
        self.activation = activation

    def forward(self, x: Tensor) -> Tensor:
        f, g = self.feature, self.gate
        return F.gated_conv2d(
            x, f.weight, g.weight, f.bias, g.bias,
            stride=f.stride, dilation=f.dilation, padding=f.padding,
            activation=self.activation,
        )
