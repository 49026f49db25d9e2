from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wavefill.errors import ShapeMismatch

ADAM_EPS = 1e-8


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.0
    beta2: float = 0.9
    epsilon: float = ADAM_EPS
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """Bias-corrected Adam update, in place on ``params`` (name -> Parameter).

    A missing gradient counts as zero.
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**t
    correction2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        elif g.shape != p.shape:
            raise ShapeMismatch(f"{name}: gradient {g.shape} vs parameter {p.shape}")
        g = g.astype(p.dtype, copy=False)
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        state.first_moment[name] = m.astype(p.dtype, copy=False)
        state.second_moment[name] = v.astype(p.dtype, copy=False)
        update = state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        p.data = (p.data - update).astype(p.dtype, copy=False)


class Adam:
    def __init__(self, named_params, lr: float, betas=(0.0, 0.9), eps: float = ADAM_EPS):
        self.params = dict(named_params)
        self.state = AdamState(learning_rate=lr, beta1=betas[0], beta2=betas[1], epsilon=eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        grads = {name: p.grad for name, p in self.params.items()}
        adam_step(self.params, grads, self.state)
