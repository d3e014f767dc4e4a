"""Gradient-based update rules on the real view of complex parameters.

A complex vector alpha of length m is updated through its interleaved real
view [Re a0, Im a0, Re a1, ...] of length 2m. Drivers pass the complex
gradient F as its real view, so plain SGD reproduces alpha <- alpha - lr * F
exactly; adaptive rules act elementwise on the same 2m real entries.

Defaults follow the rules' original publications except for the learning
rate, which is 0.001 for every adaptive rule.
"""

from __future__ import annotations

import numpy as np


def real_view(alpha: np.ndarray) -> np.ndarray:
    """Interleaved [Re a0, Im a0, Re a1, ...] view of a complex vector."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    out = np.empty(2 * alpha.size)
    out[0::2] = alpha.real
    out[1::2] = alpha.imag
    return out


def complex_view(x: np.ndarray) -> np.ndarray:
    """Inverse of real_view."""
    x = np.asarray(x, dtype=np.float64)
    if x.size % 2 != 0:
        raise ValueError("real view must have even length")
    return x[0::2] + 1j * x[1::2]


def _check_finite(grad: np.ndarray):
    bad = np.nonzero(~np.isfinite(grad))[0]
    if bad.size:
        raise ValueError(f"non-finite gradient entry at index {bad[0]}")


class Optimizer:
    """Base class: stateful elementwise update rule on real vectors."""

    kind = "abstract"

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate
        self.t = 0

    def reset(self):
        self.t = 0
        for name in self._state_names():
            setattr(self, name, None)

    def _state_names(self):
        return ()

    def update(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=np.float64)
        grad = np.asarray(grad, dtype=np.float64)
        if params.shape != grad.shape:
            raise ValueError("params and grad must have the same shape")
        _check_finite(grad)
        for name in self._state_names():
            if getattr(self, name) is None:
                setattr(self, name, np.zeros_like(params))
        self.t += 1
        return self._apply(params, grad)

    def _apply(self, params, grad):
        raise NotImplementedError


class Sgd(Optimizer):
    kind = "sgd"

    def __init__(self, learning_rate: float = 0.01):
        super().__init__(learning_rate)

    def _apply(self, params, grad):
        return params - self.learning_rate * grad


class AdaGrad(Optimizer):
    kind = "adagrad"

    def __init__(self, learning_rate: float = 0.001, epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.epsilon = epsilon
        self.G = None

    def _state_names(self):
        return ("G",)

    def _apply(self, params, grad):
        self.G += grad**2
        return params - self.learning_rate * grad / (np.sqrt(self.G) + self.epsilon)


class AdaDelta(Optimizer):
    """Zeiler's rule; the proposed step is additionally scaled by learning_rate."""

    kind = "adadelta"

    def __init__(self, rho: float = 0.95, epsilon: float = 1e-8, learning_rate: float = 0.001):
        super().__init__(learning_rate)
        self.rho = rho
        self.epsilon = epsilon
        self.Eg = None
        self.Ex = None

    def _state_names(self):
        return ("Eg", "Ex")

    def _apply(self, params, grad):
        self.Eg = self.rho * self.Eg + (1 - self.rho) * grad**2
        step = -np.sqrt(self.Ex + self.epsilon) / np.sqrt(self.Eg + self.epsilon) * grad
        self.Ex = self.rho * self.Ex + (1 - self.rho) * step**2
        return params + self.learning_rate * step


class AdaMax(Optimizer):
    kind = "adamax"

    def __init__(self, learning_rate: float = 0.001, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = None
        self.u = None

    def _state_names(self):
        return ("m", "u")

    def _apply(self, params, grad):
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.u = np.maximum(self.beta2 * self.u, np.abs(grad))
        scale = self.learning_rate / (1 - self.beta1**self.t)
        step = np.divide(self.m, self.u, out=np.zeros_like(self.m), where=self.u > 0)
        return params - scale * step


class AmsGrad(Optimizer):
    kind = "amsgrad"

    def __init__(self, learning_rate: float = 0.001, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = None
        self.v = None
        self.vhat = None

    def _state_names(self):
        return ("m", "v", "vhat")

    def _apply(self, params, grad):
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        self.vhat = np.maximum(self.vhat, self.v)
        return params - self.learning_rate * self.m / (np.sqrt(self.vhat) + self.epsilon)


class RmsProp(Optimizer):
    kind = "rmsprop"

    def __init__(self, learning_rate: float = 0.001, decay: float = 0.9, epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.decay = decay
        self.epsilon = epsilon
        self.Eg = None

    def _state_names(self):
        return ("Eg",)

    def _apply(self, params, grad):
        self.Eg = self.decay * self.Eg + (1 - self.decay) * grad**2
        return params - self.learning_rate * grad / (np.sqrt(self.Eg) + self.epsilon)


OPTIMIZER_KINDS = {
    "sgd": Sgd,
    "adagrad": AdaGrad,
    "adadelta": AdaDelta,
    "adamax": AdaMax,
    "amsgrad": AmsGrad,
    "rmsprop": RmsProp,
}
