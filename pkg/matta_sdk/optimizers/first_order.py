"""First-order baselines: SGD, Adagrad and Adam."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..utils.errors import ContractError, DimensionError

FIRST_ORDER_METHODS = ("sgd", "adagrad", "adam")


@dataclass(eq=False)
class FirstOrderState:
    """Accumulators for one parameter tensor. Created lazily on the first step."""

    method: str = "sgd"
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    accumulator: Optional[np.ndarray] = None
    first_moment: Optional[np.ndarray] = None
    second_moment: Optional[np.ndarray] = None
    step: int = 0

    def __post_init__(self):
        if self.method not in FIRST_ORDER_METHODS:
            raise ContractError(
                f"Unknown first-order method '{self.method}' (expected one of {', '.join(FIRST_ORDER_METHODS)})"
            )
        if self.epsilon < 0:
            raise ContractError(f"epsilon must be >= 0, got {self.epsilon}")

    def _ensure(self, shape) -> None:
        if self.accumulator is None:
            self.accumulator = np.zeros(shape)
            self.first_moment = np.zeros(shape)
            self.second_moment = np.zeros(shape)
        elif self.accumulator.shape != shape:
            raise DimensionError(f"Optimizer state has shape {self.accumulator.shape}, gradient has {shape}")

    def direction(self, grad: np.ndarray) -> np.ndarray:
        """Advance the accumulators by one gradient and return the step direction (before lr)."""
        grad = np.asarray(grad, dtype=np.float64)
        self._ensure(grad.shape)
        self.step += 1
        if self.method == "sgd":
            return grad
        if self.method == "adagrad":
            self.accumulator += grad * grad
            denom = np.sqrt(self.accumulator + self.epsilon)
            return np.divide(grad, denom, out=np.zeros_like(grad), where=denom > 0)
        self.first_moment = self.beta1 * self.first_moment + (1.0 - self.beta1) * grad
        self.second_moment = self.beta2 * self.second_moment + (1.0 - self.beta2) * grad * grad
        m_hat = self.first_moment / (1.0 - self.beta1 ** self.step)
        v_hat = self.second_moment / (1.0 - self.beta2 ** self.step)
        denom = np.sqrt(v_hat) + self.epsilon
        return np.divide(m_hat, denom, out=np.zeros_like(grad), where=denom > 0)


def first_order_step(state: FirstOrderState, param, grad, lr: Optional[float] = None) -> np.ndarray:
    """Return the updated parameter; ``lr`` overrides the state's learning rate."""
    param = np.asarray(getattr(param, "data", param), dtype=np.float64)
    grad = np.asarray(getattr(grad, "data", grad), dtype=np.float64)
    if param.shape != grad.shape:
        raise DimensionError(f"Parameter shape {param.shape} does not match gradient shape {grad.shape}")
    rate = state.lr if lr is None else lr
    return param - rate * state.direction(grad)
