"""
First-order update rules for the latent depth field.

`step` proposes new parameters without touching the optimizer state; the
solver calls `accept` once the proposal lowers the loss, or `shrink` to
halve the step size and propose again.
"""

import numpy as np

from .models import OptimizerChoices


class Optimizer:
    def __init__(self, step_size):
        self.step_size = step_size
        self._pending = None

    def step(self, params, grad):
        raise NotImplementedError

    def accept(self):
        pass

    def shrink(self):
        self.step_size *= 0.5


class GradientDescent(Optimizer):
    def step(self, params, grad):
        return params - self.step_size * grad


class Momentum(Optimizer):
    def __init__(self, step_size, beta=0.9):
        super().__init__(step_size)
        self.beta = beta
        self.velocity = None

    def step(self, params, grad):
        velocity = grad if self.velocity is None else self.beta * self.velocity + grad
        self._pending = velocity
        return params - self.step_size * velocity

    def accept(self):
        self.velocity = self._pending


class Adam(Optimizer):
    def __init__(self, step_size, beta1=0.9, beta2=0.999, epsilon=1e-8):
        super().__init__(step_size)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.first = None
        self.second = None
        self.count = 0

    def step(self, params, grad):
        first = np.zeros_like(params) if self.first is None else self.first
        second = np.zeros_like(params) if self.second is None else self.second
        count = self.count + 1
        first = self.beta1 * first + (1.0 - self.beta1) * grad
        second = self.beta2 * second + (1.0 - self.beta2) * grad * grad
        self._pending = (count, first, second)
        first_hat = first / (1.0 - self.beta1**count)
        second_hat = second / (1.0 - self.beta2**count)
        return params - self.step_size * first_hat / (np.sqrt(second_hat) + self.epsilon)

    def accept(self):
        self.count, self.first, self.second = self._pending


OPTIMIZERS = {
    OptimizerChoices.DESCENT: GradientDescent,
    OptimizerChoices.MOMENTUM: Momentum,
    OptimizerChoices.ADAM: Adam,
}


def build_optimizer(name, step_size):
    return OPTIMIZERS[OptimizerChoices(name)](step_size)
