"""
Ill-conditioned quadratic bowl for comparing Shampoo against diagonal Adagrad.

    f(W) = 1/2 ||P W Q - B||_F^2

P and Q are random SPD matrices with log-spaced eigenvalues, each with
condition number sqrt(cond), so the linear map vec(W) -> vec(P W Q) has
condition number ``cond``.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..diffcore import Rng
from ..utils.errors import ContractError
from .first_order import FirstOrderState, first_order_step
from .shampoo import ShampooState, shampoo_accumulate, shampoo_step

DEFAULT_LR_GRID = (0.01, 0.03, 0.1, 0.3, 1.0)
BOWL_METHODS = ("shampoo", "adagrad")


@dataclass(eq=False)
class QuadraticBowl:
    left: np.ndarray
    right: np.ndarray
    target: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.left.shape[1], self.right.shape[0])

    def residual(self, w: np.ndarray) -> np.ndarray:
        return self.left @ w @ self.right - self.target

    def loss(self, w: np.ndarray) -> float:
        r = self.residual(w)
        return 0.5 * float(np.sum(r * r))

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return self.left.T @ self.residual(w) @ self.right.T


def _random_spd(rng: Rng, k: int, cond: float) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(k, k))
    q = q * np.sign(np.diag(r))
    eigenvalues = np.logspace(0.0, np.log10(cond), k)
    return (q * eigenvalues) @ q.T


def make_bowl(seed: int, shape: Tuple[int, int] = (4, 4), cond: float = 1e3) -> QuadraticBowl:
    if cond < 1:
        raise ContractError(f"cond must be >= 1, got {cond}")
    rng = Rng(seed)
    m, n = shape
    side_cond = float(np.sqrt(cond))
    left = _random_spd(rng.split(0), m, side_cond)
    right = _random_spd(rng.split(1), n, side_cond)
    optimum = rng.split(2).normal(m, n)
    return QuadraticBowl(left=left, right=right, target=left @ optimum @ right)


def steps_to_tolerance(
    bowl: QuadraticBowl,
    method: str,
    lr: float,
    tolerance: float = 1e-6,
    max_steps: int = 5000,
    epsilon: float = 1e-12,
    update_interval: int = 1,
) -> Optional[int]:
    """Steps until f(W) <= tolerance from W = 0, or None (budget exhausted or diverged)."""
    if method not in BOWL_METHODS:
        raise ContractError(f"Unknown bowl method '{method}' (expected one of {', '.join(BOWL_METHODS)})")
    w = np.zeros(bowl.shape)
    if method == "shampoo":
        state = ShampooState(shape=bowl.shape, update_interval=update_interval, epsilon=epsilon)
    else:
        state = FirstOrderState(method="adagrad", lr=lr, epsilon=epsilon)
    start = bowl.loss(w)
    for step in range(1, max_steps + 1):
        grad = bowl.gradient(w)
        if method == "shampoo":
            shampoo_accumulate(state, grad)
            w = shampoo_step(state, w, grad, lr)
        else:
            w = first_order_step(state, w, grad)
        loss = bowl.loss(w)
        if not np.isfinite(loss) or loss > 1e6 * max(start, 1.0):
            return None
        if loss <= tolerance:
            return step
    return None


def quadratic_bowl_steps(
    seed: int,
    lr_grid: Sequence[float] = DEFAULT_LR_GRID,
    shape: Tuple[int, int] = (4, 4),
    cond: float = 1e3,
    tolerance: float = 1e-6,
    max_steps: int = 5000,
) -> Dict[str, Dict[str, Optional[float]]]:
    """
    Best steps-to-tolerance per method over the lr grid.

    Returns {method: {"steps": int or None, "lr": best lr or None}}.
    """
    bowl = make_bowl(seed, shape, cond)
    results: Dict[str, Dict[str, Optional[float]]] = {}
    for method in BOWL_METHODS:
        best_steps, best_lr = None, None
        for lr in lr_grid:
            steps = steps_to_tolerance(bowl, method, lr, tolerance=tolerance, max_steps=max_steps)
            if steps is not None and (best_steps is None or steps < best_steps):
                best_steps, best_lr = steps, lr
        results[method] = {"steps": best_steps, "lr": best_lr}
    return results
