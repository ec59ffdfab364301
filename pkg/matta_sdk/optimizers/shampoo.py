"""
Shampoo with Kronecker-factored preconditioners.

For a parameter matrix W (m x n) with gradient G the optimizer keeps

    left  = sum_t G_t G_t^T      (m x m)
    right = sum_t G_t^T G_t      (n x n)

and steps W <- W - lr * (left + eps I)^(-1/4) G (right + eps I)^(-1/4).
With row-major vec this is (left^-1/4 kron right^-1/4) vec(G).

Inverse roots come from a symmetric eigendecomposition computed with
parallel cyclic Jacobi rotations, warm-started from the previous basis.
They are recomputed after every accumulation during a warm-up, then every
update_interval steps.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..utils.errors import BoundsError, ContractError, DimensionError, NumericalError

ROOT_METHODS = ("jacobi", "eigh")
SYMMETRY_TOLERANCE = 1e-9
JACOBI_TOLERANCE = 1e-14
JACOBI_MAX_SWEEPS = 100


# --------------------------------------------------------------- eigensolver

def _round_robin_pairs(n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """n-1 rounds of n/2 disjoint (p, q) pairs covering every pair once (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        p = np.array([min(players[i], players[n - 1 - i]) for i in range(n // 2)])
        q = np.array([max(players[i], players[n - 1 - i]) for i in range(n // 2)])
        rounds.append((p, q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _off_diagonal_max(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.abs(off).max()) if off.size else 0.0


def _is_orthogonal(basis: np.ndarray) -> bool:
    k = basis.shape[0]
    return float(np.abs(basis.T @ basis - np.eye(k)).max()) <= 1e-10


def jacobi_eigh(
    a: np.ndarray,
    basis: Optional[np.ndarray] = None,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
    tolerance: float = JACOBI_TOLERANCE,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues and eigenvectors (as columns) of a symmetric matrix.

    Each round applies n/2 independent rotations at once. A previous
    orthogonal basis, when given, is used as the starting point.
    """
    a = np.asarray(a, dtype=np.float64)
    k = a.shape[0]
    if k == 0:
        return np.zeros(0), np.zeros((0, 0))
    if k == 1:
        return a.diagonal().copy(), np.eye(1)

    if basis is not None and basis.shape == (k, k) and _is_orthogonal(basis):
        vectors = basis.copy()
    else:
        vectors = np.eye(k)
    work = vectors.T @ a @ vectors
    work = 0.5 * (work + work.T)

    n = k + (k % 2)
    if n != k:
        padded = np.zeros((n, n))
        padded[:k, :k] = work
        work = padded
        padded_vectors = np.eye(n)
        padded_vectors[:k, :k] = vectors
        vectors = padded_vectors

    scale = float(np.linalg.norm(work))
    if scale == 0.0:
        return np.zeros(k), vectors[:k, :k]
    threshold = tolerance * scale
    rounds = _round_robin_pairs(n)

    for _ in range(max_sweeps):
        if _off_diagonal_max(work) <= threshold:
            return work.diagonal()[:k].copy(), vectors[:k, :k]
        for p, q in rounds:
            apq = work[p, q]
            active = np.abs(apq) > threshold * 1e-3
            if not active.any():
                continue
            safe_apq = np.where(active, apq, 1.0)
            phi = (work[q, q] - work[p, p]) / (2.0 * safe_apq)
            t = np.where(phi >= 0.0, 1.0, -1.0) / (np.abs(phi) + np.sqrt(phi * phi + 1.0))
            c = np.where(active, 1.0 / np.sqrt(t * t + 1.0), 1.0)
            s = np.where(active, t * c, 0.0)
            rotation = np.eye(n)
            rotation[p, p] = c
            rotation[q, q] = c
            rotation[p, q] = s
            rotation[q, p] = -s
            work = rotation.T @ work @ rotation
            work = 0.5 * (work + work.T)
            vectors = vectors @ rotation

    raise NumericalError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps (k={k})",
        fix_instructions=["Try optimizer.root_method: eigh", "Increase optimizer.epsilon"],
    )


def symmetric_eigh(
    a: np.ndarray,
    method: str = "jacobi",
    basis: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    if method == "jacobi":
        return jacobi_eigh(a, basis=basis)
    if method == "eigh":
        return np.linalg.eigh(a)
    raise ContractError(f"Unknown root method '{method}' (expected one of {', '.join(ROOT_METHODS)})")


def _check_symmetric(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {a.shape}")
    if a.size:
        asymmetry = float(np.abs(a - a.T).max())
        if asymmetry > SYMMETRY_TOLERANCE * max(1.0, float(np.abs(a).max())):
            raise ContractError(f"Matrix is not symmetric (max |a - a^T| = {asymmetry:.3e})")


def root_from_eigen(values: np.ndarray, vectors: np.ndarray, p: int, epsilon: float) -> np.ndarray:
    """
    Q diag((lambda + eps)^(-1/p)) Q^T.

    Eigenvalues are clipped at zero first, so with eps > 0 every direction gets
    at most eps^(-1/p). With eps == 0, eigenvalues at round-off level relative
    to the largest one are treated as zero and get 0.
    """
    shifted = np.maximum(values, 0.0) + epsilon
    if epsilon > 0:
        cutoff = 0.0
    else:
        cutoff = np.finfo(np.float64).eps * max(len(values), 1) * (float(shifted.max()) if shifted.size else 0.0)
    powered = np.zeros_like(shifted)
    keep = shifted > cutoff
    powered[keep] = shifted[keep] ** (-1.0 / p)
    root = (vectors * powered) @ vectors.T
    return 0.5 * (root + root.T)


def inv_pth_root(
    a,
    p: int = 4,
    epsilon: float = 1e-6,
    method: str = "jacobi",
    basis: Optional[np.ndarray] = None,
) -> np.ndarray:
    """(a + eps I)^(-1/p) for a symmetric positive semidefinite a."""
    a = np.asarray(getattr(a, "data", a), dtype=np.float64)
    _check_symmetric(a)
    if p not in (2, 4):
        raise ContractError(f"inv_pth_root supports p in (2, 4), got {p}")
    if epsilon < 0:
        raise ContractError(f"epsilon must be >= 0, got {epsilon}")
    values, vectors = symmetric_eigh(a, method, basis)
    return root_from_eigen(values, vectors, p, epsilon)


# ------------------------------------------------------------------ optimizer

@dataclass(eq=False)
class ShampooState:
    """Accumulators and cached inverse roots for one parameter matrix."""

    shape: Tuple[int, int]
    update_interval: int = 10
    epsilon: float = 1e-6
    root_method: str = "jacobi"
    left: np.ndarray = field(default=None)
    right: np.ndarray = field(default=None)
    left_root: Optional[np.ndarray] = None
    right_root: Optional[np.ndarray] = None
    left_basis: Optional[np.ndarray] = None
    right_basis: Optional[np.ndarray] = None
    step: int = 0

    def __post_init__(self):
        m, n = self.shape
        if self.update_interval < 1:
            raise ContractError(f"update_interval must be >= 1, got {self.update_interval}")
        if self.root_method not in ROOT_METHODS:
            raise ContractError(f"Unknown root method '{self.root_method}'")
        if self.left is None:
            self.left = np.zeros((m, m))
        if self.right is None:
            self.right = np.zeros((n, n))

    def accumulators(self) -> Dict[str, np.ndarray]:
        return {"left": self.left, "right": self.right}


def _grad_array(grad, shape) -> np.ndarray:
    grad = np.asarray(getattr(grad, "data", grad), dtype=np.float64)
    if grad.shape != tuple(shape):
        raise DimensionError(f"Shampoo state has shape {tuple(shape)}, gradient has {grad.shape}")
    return grad


def shampoo_accumulate(state: ShampooState, grad) -> None:
    grad = _grad_array(grad, state.shape)
    left = state.left + grad @ grad.T
    right = state.right + grad.T @ grad
    state.left = 0.5 * (left + left.T)
    state.right = 0.5 * (right + right.T)
    state.step += 1


def refresh_roots(state: ShampooState) -> None:
    values, state.left_basis = symmetric_eigh(state.left, state.root_method, state.left_basis)
    state.left_root = root_from_eigen(values, state.left_basis, 4, state.epsilon)
    values, state.right_basis = symmetric_eigh(state.right, state.root_method, state.right_basis)
    state.right_root = root_from_eigen(values, state.right_basis, 4, state.epsilon)


def warmup_steps(state: ShampooState) -> int:
    return max(state.update_interval, *state.shape)


def roots_due(state: ShampooState) -> bool:
    """
    Whether the cached roots must be recomputed before the next direction.

    Roots are refreshed after every accumulation during a warm-up of
    max(update_interval, m, n) accumulations, then every ``update_interval``
    steps. A rank-one gradient stream needs max(m, n) accumulations before
    either accumulator can be full rank.
    """
    if state.left_root is None or state.step <= warmup_steps(state):
        return True
    return state.step % state.update_interval == 0


def shampoo_direction(state: ShampooState, grad) -> np.ndarray:
    """left_root G right_root, refreshing the cached roots when they are due."""
    grad = _grad_array(grad, state.shape)
    if roots_due(state):
        refresh_roots(state)
    return state.left_root @ grad @ state.right_root


def shampoo_step(state: ShampooState, param, grad, lr: float) -> np.ndarray:
    """Return W - lr * left_root G right_root. Call shampoo_accumulate first."""
    param = np.asarray(getattr(param, "data", param), dtype=np.float64)
    if param.shape != tuple(state.shape):
        raise DimensionError(f"Shampoo state has shape {tuple(state.shape)}, parameter has {param.shape}")
    return param - lr * shampoo_direction(state, grad)


# ---------------------------------------------------------- block structure

@dataclass
class BlockStats:
    split: int
    size: int
    student_mean: float
    ta_extra_mean: float
    cross_mean: float
    within_mean: float
    ratio: float
    zero_diagonal: bool

    def as_row(self) -> Dict[str, object]:
        return {
            "split": self.split,
            "size": self.size,
            "student_mean_abs": self.student_mean,
            "ta_extra_mean_abs": self.ta_extra_mean,
            "cross_mean_abs": self.cross_mean,
            "within_mean_abs": self.within_mean,
            "within_cross_ratio": self.ratio,
            "zero_diagonal": self.zero_diagonal,
        }


def correlation_matrix(accumulator: np.ndarray) -> Tuple[np.ndarray, bool]:
    """C_ij = acc_ij / sqrt(acc_ii acc_jj); rows and columns with a zero diagonal are set to 0."""
    diag = np.diag(accumulator).astype(np.float64)
    zero = diag <= 0.0
    norms = np.sqrt(np.where(zero, 1.0, diag))
    corr = accumulator / np.outer(norms, norms)
    corr[zero, :] = 0.0
    corr[:, zero] = 0.0
    return corr, bool(zero.any())


def _mean_abs(values: np.ndarray) -> float:
    return float(np.abs(values).mean()) if values.size else 0.0


def block_stats(accumulator: np.ndarray, split: int) -> Tuple[np.ndarray, BlockStats]:
    accumulator = np.asarray(accumulator, dtype=np.float64)
    size = accumulator.shape[0]
    if not 0 <= split <= size:
        raise BoundsError(f"Split {split} outside [0, {size}] for a {size}x{size} accumulator")
    corr, zero_diagonal = correlation_matrix(accumulator)
    off = ~np.eye(size, dtype=bool)
    student = np.zeros((size, size), dtype=bool)
    student[:split, :split] = True
    extra = np.zeros((size, size), dtype=bool)
    extra[split:, split:] = True
    cross = ~(student | extra)

    student_mean = _mean_abs(corr[student & off])
    extra_mean = _mean_abs(corr[extra & off])
    within_mean = _mean_abs(corr[(student | extra) & off])
    cross_mean = _mean_abs(corr[cross])
    if cross_mean > 0.0:
        ratio = within_mean / cross_mean
    else:
        ratio = float("inf") if within_mean > 0.0 else float("nan")
    stats = BlockStats(
        split=split,
        size=size,
        student_mean=student_mean,
        ta_extra_mean=extra_mean,
        cross_mean=cross_mean,
        within_mean=within_mean,
        ratio=ratio,
        zero_diagonal=zero_diagonal,
    )
    return corr, stats


def preconditioner_report(state: ShampooState, split: int, side: str = "right") -> Tuple[np.ndarray, BlockStats]:
    """Correlation heatmap and block statistics of the accumulator indexing the nested dimension."""
    if side not in ("left", "right"):
        raise ContractError(f"side must be 'left' or 'right', got '{side}'")
    accumulator = state.left if side == "left" else state.right
    return block_stats(accumulator.copy(), split)
