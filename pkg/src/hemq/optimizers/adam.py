"""Adam step for a single parameter array."""

import numpy as np


class Adam:
    """Adaptive moment estimation with bias correction and no weight decay."""

    def __init__(
        self,
        lr: float = 0.1,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m: np.ndarray = np.zeros(0)
        self.v: np.ndarray = np.zeros(0)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Return updated parameters; ``params`` is left untouched."""
        if self.t == 0:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1

        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t

        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * (grad * grad)

        denom = np.sqrt(self.v / bc2) + self.epsilon
        return params - (self.lr / bc1) * self.m / denom
