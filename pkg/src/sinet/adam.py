"""Adam optimizer over named float64 parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericError

__all__ = ["AdamState", "adam_step", "Adam"]


@dataclass
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state):
    """Apply one Adam update in place.

    ``params`` and ``grads`` map names to arrays of equal shape. Moments are
    created lazily on the first call. Returns ``params`` for convenience.
    """
    for name, g in grads.items():
        if name not in params:
            raise DimensionError(f"gradient for unknown parameter {name!r}")
        if np.shape(g) != np.shape(params[name]):
            raise DimensionError(
                f"gradient {name!r} has shape {np.shape(g)}, parameter has {np.shape(params[name])}"
            )
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")

    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return params


class Adam:
    """Adam bound to a list of :class:`~sinet.tensor.Tensor` leaves."""

    def __init__(self, named_tensors, learning_rate=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.tensors = dict(named_tensors)
        self.state = AdamState(learning_rate, beta1, beta2, epsilon)

    def zero_grad(self):
        for t in self.tensors.values():
            t.grad = None

    def step(self):
        params = {k: t.data for k, t in self.tensors.items()}
        grads = {k: t.grad for k, t in self.tensors.items() if t.grad is not None}
        adam_step(params, grads, self.state)
