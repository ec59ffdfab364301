"""
Optimizer over all tensors of a MatTAModel.

Tensors are partitioned into groups so that every tensor is stepped exactly
once per iteration. Under the joint granularity each nested dense layer's
TA weight blocks form one group whose gradient is assembled into the full
W_TA layout before preconditioning; everything else is its own group.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ..matlayers import DENSE_NAMES, MatTAModel
from ..utils.errors import ContractError
from .first_order import FIRST_ORDER_METHODS, FirstOrderState
from .shampoo import ROOT_METHODS, ShampooState, shampoo_accumulate, shampoo_direction

OPTIMIZER_METHODS = FIRST_ORDER_METHODS + ("shampoo",)
GRANULARITIES = ("joint", "per-tensor")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "shampoo"
    lr: float = 0.01
    ta_lr: Optional[float] = None
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-6
    update_interval: int = 10
    granularity: str = "joint"
    root_method: str = "jacobi"

    def __post_init__(self):
        if self.method not in OPTIMIZER_METHODS:
            raise ContractError(f"Unknown optimizer '{self.method}' (expected one of {', '.join(OPTIMIZER_METHODS)})")
        if self.granularity not in GRANULARITIES:
            raise ContractError(f"Unknown granularity '{self.granularity}' (expected one of {', '.join(GRANULARITIES)})")
        if self.root_method not in ROOT_METHODS:
            raise ContractError(f"Unknown root method '{self.root_method}'")
        if not self.lr > 0:
            raise ContractError(f"lr must be > 0, got {self.lr}")
        if self.ta_lr is not None and not self.ta_lr > 0:
            raise ContractError(f"ta_lr must be > 0 when set, got {self.ta_lr}")
        if self.epsilon < 0:
            raise ContractError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.update_interval < 1:
            raise ContractError(f"update_interval must be >= 1, got {self.update_interval}")


@dataclass(eq=False)
class ParamGroup:
    """
    Tensors stepped together. ``layout`` is None for a single tensor, or the
    (top, extra, right) member names of an assembled nested W_TA.
    """

    name: str
    members: List[str]
    layout: Optional[tuple] = None
    m_s: int = 0
    n_s: int = 0
    state: object = None


def _assemble(top: np.ndarray, extra: np.ndarray, right: np.ndarray) -> np.ndarray:
    return np.concatenate([np.concatenate([top, extra], axis=0), right], axis=1)


def _disassemble(full: np.ndarray, m_s: int, n_s: int):
    return full[:m_s, :n_s], full[m_s:, :n_s], full[:, n_s:]


class ModelOptimizer:
    """Steps every tensor of a model once per call, Student and TA alike."""

    def __init__(self, config: OptimizerConfig, model: MatTAModel):
        self.config = config
        self.student_names = set(model.student_names())
        self.groups: List[ParamGroup] = []
        tensors = model.named_tensors()
        claimed = set()

        joint = config.method == "shampoo" and config.granularity == "joint"
        if joint:
            for index, block in enumerate(model.blocks):
                for dense_name in DENSE_NAMES:
                    layer = getattr(block, dense_name)
                    prefix = f"blocks.{index}.{dense_name}"
                    layout = (f"{prefix}.{layer.ta_weight_name}", f"{prefix}.w_ta1", f"{prefix}.w_ta2")
                    group = ParamGroup(name=prefix, members=list(layout), layout=layout, m_s=layer.m_s, n_s=layer.n_s)
                    self.groups.append(group)
                    claimed.update(layout)
        for name in tensors:
            if name not in claimed:
                self.groups.append(ParamGroup(name=name, members=[name]))
                claimed.add(name)

        seen = [m for g in self.groups for m in g.members]
        if len(seen) != len(set(seen)) or set(seen) != set(tensors):
            raise ContractError("Optimizer groups must cover every model tensor exactly once")

        for group in self.groups:
            shape = self._group_shape(group, tensors)
            if config.method == "shampoo":
                group.state = ShampooState(
                    shape=shape,
                    update_interval=config.update_interval,
                    epsilon=config.epsilon,
                    root_method=config.root_method,
                )
            else:
                group.state = FirstOrderState(
                    method=config.method,
                    lr=config.lr,
                    beta1=config.beta1,
                    beta2=config.beta2,
                    epsilon=config.epsilon,
                )

    @staticmethod
    def _group_shape(group: ParamGroup, tensors: Dict[str, np.ndarray]):
        if group.layout is None:
            return tensors[group.name].shape
        top, extra, right = (tensors[name] for name in group.layout)
        return (top.shape[0] + extra.shape[0], top.shape[1] + right.shape[1])

    def lr_for(self, name: str) -> float:
        """Learning rate of one tensor; the override applies to tensors outside the Student."""
        if self.config.ta_lr is not None and name not in self.student_names:
            return self.config.ta_lr
        return self.config.lr

    def _direction(self, group: ParamGroup, grad: np.ndarray) -> np.ndarray:
        if isinstance(group.state, ShampooState):
            shampoo_accumulate(group.state, grad)
            return shampoo_direction(group.state, grad)
        return group.state.direction(grad)

    def step(self, model: MatTAModel, grads: Dict[str, np.ndarray]) -> None:
        """
        Apply one update to every tensor. Names missing from ``grads`` get a
        zero gradient (the loss did not reach them).
        """
        tensors = model.named_tensors()

        def grad_of(name):
            g = grads.get(name)
            return np.zeros_like(tensors[name]) if g is None else np.asarray(g, dtype=np.float64)

        for group in self.groups:
            if group.layout is None:
                direction = self._direction(group, grad_of(group.name))
                model.set_tensor(group.name, tensors[group.name] - self.lr_for(group.name) * direction)
                continue
            full_grad = _assemble(*(grad_of(name) for name in group.layout))
            pieces = _disassemble(self._direction(group, full_grad), group.m_s, group.n_s)
            for name, piece in zip(group.layout, pieces):
                model.set_tensor(name, tensors[name] - self.lr_for(name) * piece)

    def shampoo_states(self) -> Dict[str, ShampooState]:
        return {g.name: g.state for g in self.groups if isinstance(g.state, ShampooState)}

    def state_tensors(self) -> Dict[str, np.ndarray]:
        """Shampoo accumulators under ``optim.<group>.left|right`` for checkpointing."""
        found: Dict[str, np.ndarray] = {}
        for name, state in self.shampoo_states().items():
            found[f"optim.{name}.left"] = state.left
            found[f"optim.{name}.right"] = state.right
        return found


def build_optimizer(config: OptimizerConfig, model: MatTAModel) -> ModelOptimizer:
    return ModelOptimizer(config, model)
