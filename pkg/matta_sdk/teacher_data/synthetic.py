"""
Synthetic frozen-Teacher task.

Inputs come from a mixture of isotropic Gaussians; labels come from a fixed
random MLP teacher whose logits are divided by a temperature. In ``soft``
mode the label rows are the teacher's probabilities, in ``hard-event`` mode
they are one-hot draws from them.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..diffcore import STREAM_TASK, Rng, Tensor, softmax_rows
from ..utils.errors import ContractError

LABEL_MODES = ("soft", "hard-event")


@dataclass(frozen=True)
class TaskConfig:
    seed: Optional[int] = None
    d_in: int = 16
    n_classes: int = 2
    teacher_hidden: int = 32
    n_components: int = 8
    temperature: float = 1.0
    label_mode: str = "soft"
    teacher_scale: float = 3.0


@dataclass(eq=False)
class SyntheticTask:
    teacher_w1: np.ndarray
    teacher_w2: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    weights: np.ndarray
    temperature: float
    label_mode: str
    seed: int

    def __post_init__(self):
        for array in (self.teacher_w1, self.teacher_w2, self.means, self.scales, self.weights):
            array.flags.writeable = False

    @property
    def d_in(self) -> int:
        return self.teacher_w1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.teacher_w2.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]


def task_new(
    seed: int,
    d_in: int = 16,
    n_classes: int = 2,
    teacher_hidden: int = 32,
    n_components: int = 8,
    temperature: float = 1.0,
    label_mode: str = "soft",
    teacher_scale: float = 3.0,
) -> SyntheticTask:
    if n_classes < 2:
        raise ContractError(f"A task needs at least 2 classes, got {n_classes}")
    if not temperature > 0:
        raise ContractError(f"Temperature must be > 0, got {temperature}")
    if d_in < 1 or teacher_hidden < 1 or n_components < 1:
        raise ContractError(
            f"d_in, teacher_hidden and n_components must be >= 1, got {d_in}, {teacher_hidden}, {n_components}"
        )
    if label_mode not in LABEL_MODES:
        raise ContractError(f"Unknown label mode '{label_mode}' (expected one of {', '.join(LABEL_MODES)})")

    rng = Rng(seed, (STREAM_TASK,))
    teacher_w1 = rng.normal(d_in, teacher_hidden, std=1.0 / np.sqrt(d_in))
    teacher_w2 = rng.normal(teacher_hidden, n_classes, std=teacher_scale / np.sqrt(teacher_hidden))
    means = rng.normal(n_components, d_in, std=1.5)
    scales = rng.uniform(0.5, 1.5, size=n_components)
    raw = rng.uniform(0.5, 1.5, size=n_components)
    return SyntheticTask(
        teacher_w1=teacher_w1,
        teacher_w2=teacher_w2,
        means=means,
        scales=scales,
        weights=raw / raw.sum(),
        temperature=float(temperature),
        label_mode=label_mode,
        seed=int(seed),
    )


def task_from_config(config: TaskConfig, run_seed: int = 0) -> SyntheticTask:
    return task_new(
        seed=run_seed if config.seed is None else config.seed,
        d_in=config.d_in,
        n_classes=config.n_classes,
        teacher_hidden=config.teacher_hidden,
        n_components=config.n_components,
        temperature=config.temperature,
        label_mode=config.label_mode,
        teacher_scale=config.teacher_scale,
    )


def teacher_logits(task: SyntheticTask, x) -> np.ndarray:
    """Teacher logits already divided by the temperature."""
    x = np.asarray(getattr(x, "data", x), dtype=np.float64)
    return (np.tanh(x @ task.teacher_w1) @ task.teacher_w2) / task.temperature


def teacher_probabilities(task: SyntheticTask, x) -> np.ndarray:
    return softmax_rows(Tensor(teacher_logits(task, x))).numpy()


def sample_inputs(task: SyntheticTask, rng: Rng, batch_size: int) -> np.ndarray:
    if batch_size < 1:
        raise ContractError(f"Batch size must be >= 1, got {batch_size}")
    components = rng.choice(task.n_components, size=batch_size, p=task.weights)
    noise = rng.normal(batch_size, task.d_in)
    return task.means[components] + task.scales[components, None] * noise


def sample_batch(task: SyntheticTask, rng: Rng, batch_size: int) -> Tuple[Tensor, Tensor]:
    """Fresh i.i.d. inputs and labels; every call advances ``rng``."""
    x = sample_inputs(task, rng, batch_size)
    y = teacher_probabilities(task, x)
    if task.label_mode == "hard-event":
        picks = rng.categorical(y)
        y = np.zeros_like(y)
        y[np.arange(batch_size), picks] = 1.0
    return Tensor(x), Tensor(y)
