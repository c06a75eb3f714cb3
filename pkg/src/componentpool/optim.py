"""Adam optimizer with bias correction and a learning-rate halving schedule."""

from __future__ import annotations

import numpy as np

from .nn import Parameter


class Adam:
    def __init__(
        self,
        parameters: list[Parameter],
        learning_rate: float,
        betas: tuple[float, float] = (0.9, 0.999),
        epsilon: float = 1e-8,
    ):
        self.parameters = parameters
        self.learning_rate = learning_rate
        self.beta1, self.beta2 = betas
        self.epsilon = epsilon
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in parameters]
        self._v = [np.zeros_like(p.value) for p in parameters]

    def zero_grad(self) -> None:
        for p in self.parameters:
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for p, m, v in zip(self.parameters, self._m, self._v):
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.value -= self.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + self.epsilon)


def halved_learning_rate(base_lr: float, epoch: int, halve_every: int | None) -> float:
    """LR multiplied by 0.5 for every completed halving interval."""
    if not halve_every:
        return base_lr
    return base_lr * 0.5 ** (epoch // halve_every)
