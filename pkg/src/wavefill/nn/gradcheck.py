"""Central finite-difference checks for the autodiff engine."""
from __future__ import annotations

import numpy as np


def relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def numeric_gradient(fn, tensor, h: float = 1e-4, indices=None) -> np.ndarray:
    """d fn() / d tensor.data by central differences, optionally at selected flat indices."""
    flat = tensor.data.reshape(-1)
    idx = range(flat.size) if indices is None else indices
    grad = np.zeros(flat.size, dtype=np.float64)
    for i in idx:
        saved = flat[i]
        flat[i] = saved + h
        up = float(fn().data)
        flat[i] = saved - h
        down = float(fn().data)
        flat[i] = saved
        grad[i] = (up - down) / (2 * h)
    return grad.reshape(tensor.shape)


def check_gradients(fn, tensors, h: float = 1e-4, max_entries: int | None = None,
                    rng: np.random.Generator | None = None, floor: float = 1e-6) -> float:
    """Worst relative error between backprop and finite differences over ``tensors``.

    ``fn`` must rebuild the scalar output from the current tensor values.
    With ``max_entries`` only that many randomly chosen entries per tensor are probed.
    """
    for t in tensors:
        t.grad = None
    fn().backward()
    analytic = [np.zeros(t.shape) if t.grad is None else t.grad.copy() for t in tensors]
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for t, a in zip(tensors, analytic):
        size = t.data.size
        if max_entries is None or size <= max_entries:
            indices = np.arange(size)
        else:
            indices = rng.choice(size, size=max_entries, replace=False)
        numeric = numeric_gradient(fn, t, h, indices).reshape(-1)
        worst = max(worst, relative_error(a.reshape(-1)[indices], numeric[indices], floor))
    return worst
