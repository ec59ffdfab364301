"""Run configuration: strict parsing of JSON/YAML run files."""

from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..losses import CURRICULUM_SHAPES, Curriculum, LossWeights
from ..matlayers import SHARING_MODES, ModelDims
from ..optimizers import OptimizerConfig
from ..teacher_data import LABEL_MODES, TaskConfig
from ..utils.environment import resolve_setting
from ..utils.errors import ConfigError, ContractError
from ..utils.yaml_parser import load_document

DEFAULT_OUTPUT_DIR = "runs"
DEFAULT_WORKERS = 1
ABLATION_GRIDS = ("optimizer", "sharing")


@dataclass(frozen=True)
class ModelSection:
    d: int = 16
    h_s: int = 16
    h_ta: int = 32
    n_shared: int = 4
    n_extra: int = 2
    activation: str = "gelu_tanh"


@dataclass(frozen=True)
class LossSection:
    w_s: float = 1.0
    w_ta: float = 1.0
    w_d: float = 1.0
    curriculum: bool = True
    ramp_start_step: int = 0
    ramp_end_step: int = 2000
    ramp_shape: str = "linear"

    def weights(self) -> LossWeights:
        return LossWeights(self.w_s, self.w_ta, self.w_d)

    def schedule(self) -> Optional[Curriculum]:
        if not self.curriculum:
            return None
        return Curriculum(self.ramp_start_step, self.ramp_end_step, self.ramp_shape)


@dataclass(frozen=True)
class AblationSection:
    grids: Tuple[str, ...] = ABLATION_GRIDS
    first_order: str = "adam"
    first_order_lr: Optional[float] = None
    shampoo_lr: Optional[float] = None


@dataclass(frozen=True)
class FrontierSection:
    ks: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    seeds: Tuple[int, ...] = ()
    steps: int = 20000
    batch_size: int = 64
    eval_every: int = 1000
    eval_n: int = 4096
    eval_seed: Optional[int] = None
    log_every: Optional[int] = None
    output_dir: Optional[Path] = None
    record_wall_clock: bool = True
    sharing: str = "shared"
    workers: Optional[int] = None
    task: TaskConfig = field(default_factory=TaskConfig)
    model: ModelSection = field(default_factory=ModelSection)
    loss: LossSection = field(default_factory=LossSection)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    ablation: AblationSection = field(default_factory=AblationSection)
    frontier: FrontierSection = field(default_factory=FrontierSection)

    @property
    def dims(self) -> ModelDims:
        return ModelDims(
            d_in=self.task.d_in,
            d=self.model.d,
            h_s=self.model.h_s,
            h_ta=self.model.h_ta,
            n_shared=self.model.n_shared,
            n_extra=self.model.n_extra,
            n_classes=self.task.n_classes,
        )

    @property
    def seed_list(self) -> List[int]:
        return list(self.seeds) if self.seeds else [self.seed]

    @property
    def effective_log_every(self) -> int:
        return self.log_every or self.eval_every

    @property
    def effective_eval_seed(self) -> int:
        return self.seed if self.eval_seed is None else self.eval_seed

    def frontier_ks(self) -> List[int]:
        if self.frontier.ks is not None:
            return list(self.frontier.ks)
        n_total = self.dims.n_total
        return list(range(0, n_total + 1, 2))

    def to_dict(self) -> Dict[str, Any]:
        """Plain mapping that parse_run_config accepts back."""
        raw = asdict(self)
        raw["seeds"] = list(self.seeds)
        raw["output_dir"] = str(self.output_dir) if self.output_dir is not None else None
        raw["ablation"]["grids"] = list(self.ablation.grids)
        raw["frontier"]["ks"] = list(self.frontier.ks) if self.frontier.ks is not None else None
        return raw


# ------------------------------------------------------------------ parsing

_TOP_KEYS = {
    "seed", "seeds", "steps", "batch_size", "eval_every", "eval_n", "eval_seed", "log_every",
    "output_dir", "record_wall_clock", "sharing", "workers",
    "task", "model", "loss", "optimizer", "ablation", "frontier",
}


def _check_keys(raw: Dict[str, Any], allowed, where: str) -> None:
    unknown = set(raw.keys()) - set(allowed)
    if unknown:
        raise ConfigError(
            f"Unknown {where} config keys: {', '.join(sorted(unknown))}",
            fix_instructions=[f"Allowed keys: {', '.join(sorted(allowed))}"],
        )


def _section(raw: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = raw.get(name)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be a mapping")
    return value


def _int(value: Any, key: str, minimum: Optional[int] = None, optional: bool = False) -> Optional[int]:
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _float(value: Any, key: str, minimum: Optional[float] = None, optional: bool = False) -> Optional[float]:
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return float(value)


def _bool(value: Any, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key} must be true or false, got {value!r}")
    return value


def _choice(value: Any, key: str, choices) -> str:
    if value not in choices:
        raise ConfigError(f"{key} must be one of {', '.join(choices)}, got {value!r}")
    return value


def _int_list(value: Any, key: str, minimum: int = 0) -> Tuple[int, ...]:
    if not isinstance(value, list):
        raise ConfigError(f"{key} must be a list of integers")
    return tuple(_int(v, f"{key}[{i}]", minimum) for i, v in enumerate(value))


def _to_path(value: Optional[str], base_dir: Path) -> Optional[Path]:
    if not value:
        return None
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    return path


def _parse_task(raw: Dict[str, Any]) -> TaskConfig:
    defaults = TaskConfig()
    _check_keys(raw, TaskConfig.__dataclass_fields__, "task")
    return TaskConfig(
        seed=_int(raw.get("seed"), "task.seed", 0, optional=True),
        d_in=_int(raw.get("d_in", defaults.d_in), "task.d_in", 1),
        n_classes=_int(raw.get("n_classes", defaults.n_classes), "task.n_classes", 2),
        teacher_hidden=_int(raw.get("teacher_hidden", defaults.teacher_hidden), "task.teacher_hidden", 1),
        n_components=_int(raw.get("n_components", defaults.n_components), "task.n_components", 1),
        temperature=_float(raw.get("temperature", defaults.temperature), "task.temperature", 0.0),
        label_mode=_choice(raw.get("label_mode", defaults.label_mode), "task.label_mode", LABEL_MODES),
        teacher_scale=_float(raw.get("teacher_scale", defaults.teacher_scale), "task.teacher_scale", 0.0),
    )


def _parse_model(raw: Dict[str, Any]) -> ModelSection:
    defaults = ModelSection()
    _check_keys(raw, ModelSection.__dataclass_fields__, "model")
    return ModelSection(
        d=_int(raw.get("d", defaults.d), "model.d", 1),
        h_s=_int(raw.get("h_s", defaults.h_s), "model.h_s", 1),
        h_ta=_int(raw.get("h_ta", defaults.h_ta), "model.h_ta", 1),
        n_shared=_int(raw.get("n_shared", defaults.n_shared), "model.n_shared", 0),
        n_extra=_int(raw.get("n_extra", defaults.n_extra), "model.n_extra", 0),
        activation=_choice(raw.get("activation", defaults.activation), "model.activation",
                           ("tanh", "gelu_tanh", "relu")),
    )


def _parse_loss(raw: Dict[str, Any]) -> LossSection:
    defaults = LossSection()
    _check_keys(raw, LossSection.__dataclass_fields__, "loss")
    return LossSection(
        w_s=_float(raw.get("w_s", defaults.w_s), "loss.w_s", 0.0),
        w_ta=_float(raw.get("w_ta", defaults.w_ta), "loss.w_ta", 0.0),
        w_d=_float(raw.get("w_d", defaults.w_d), "loss.w_d", 0.0),
        curriculum=_bool(raw.get("curriculum", defaults.curriculum), "loss.curriculum"),
        ramp_start_step=_int(raw.get("ramp_start_step", defaults.ramp_start_step), "loss.ramp_start_step", 0),
        ramp_end_step=_int(raw.get("ramp_end_step", defaults.ramp_end_step), "loss.ramp_end_step", 0),
        ramp_shape=_choice(raw.get("ramp_shape", defaults.ramp_shape), "loss.ramp_shape", CURRICULUM_SHAPES),
    )


def _parse_optimizer(raw: Dict[str, Any]) -> OptimizerConfig:
    defaults = OptimizerConfig()
    _check_keys(raw, OptimizerConfig.__dataclass_fields__, "optimizer")
    values = {
        "method": raw.get("method", defaults.method),
        "lr": _float(raw.get("lr", defaults.lr), "optimizer.lr", 0.0),
        "ta_lr": _float(raw.get("ta_lr"), "optimizer.ta_lr", 0.0, optional=True),
        "beta1": _float(raw.get("beta1", defaults.beta1), "optimizer.beta1", 0.0),
        "beta2": _float(raw.get("beta2", defaults.beta2), "optimizer.beta2", 0.0),
        "epsilon": _float(raw.get("epsilon", defaults.epsilon), "optimizer.epsilon", 0.0),
        "update_interval": _int(raw.get("update_interval", defaults.update_interval), "optimizer.update_interval", 1),
        "granularity": raw.get("granularity", defaults.granularity),
        "root_method": raw.get("root_method", defaults.root_method),
    }
    return OptimizerConfig(**values)


def _parse_ablation(raw: Dict[str, Any]) -> AblationSection:
    defaults = AblationSection()
    _check_keys(raw, AblationSection.__dataclass_fields__, "ablation")
    grids = raw.get("grids", list(defaults.grids))
    if not isinstance(grids, list) or not grids:
        raise ConfigError("ablation.grids must be a non-empty list")
    return AblationSection(
        grids=tuple(_choice(g, "ablation.grids", ABLATION_GRIDS) for g in grids),
        first_order=_choice(raw.get("first_order", defaults.first_order), "ablation.first_order",
                            ("sgd", "adagrad", "adam")),
        first_order_lr=_float(raw.get("first_order_lr"), "ablation.first_order_lr", 0.0, optional=True),
        shampoo_lr=_float(raw.get("shampoo_lr"), "ablation.shampoo_lr", 0.0, optional=True),
    )


def _parse_frontier(raw: Dict[str, Any]) -> FrontierSection:
    _check_keys(raw, FrontierSection.__dataclass_fields__, "frontier")
    ks = raw.get("ks")
    return FrontierSection(ks=None if ks is None else _int_list(ks, "frontier.ks"))


def parse_run_config(raw: Dict[str, Any], base_dir: Optional[Path] = None) -> RunConfig:
    """
    Build a RunConfig from a mapping. Unknown keys are rejected in every
    section; relative output paths resolve against ``base_dir``.
    """
    if not isinstance(raw, dict):
        raise ConfigError("Run config must be a mapping")
    base_dir = base_dir or Path.cwd()
    _check_keys(raw, _TOP_KEYS, "run")
    defaults = RunConfig()

    try:
        config = RunConfig(
            seed=_int(raw.get("seed", defaults.seed), "seed", 0),
            seeds=_int_list(raw["seeds"], "seeds") if raw.get("seeds") is not None else (),
            steps=_int(raw.get("steps", defaults.steps), "steps", 0),
            batch_size=_int(raw.get("batch_size", defaults.batch_size), "batch_size", 1),
            eval_every=_int(raw.get("eval_every", defaults.eval_every), "eval_every", 1),
            eval_n=_int(raw.get("eval_n", defaults.eval_n), "eval_n", 1),
            eval_seed=_int(raw.get("eval_seed"), "eval_seed", 0, optional=True),
            log_every=_int(raw.get("log_every"), "log_every", 1, optional=True),
            output_dir=_to_path(raw.get("output_dir"), base_dir),
            record_wall_clock=_bool(raw.get("record_wall_clock", defaults.record_wall_clock), "record_wall_clock"),
            sharing=_choice(raw.get("sharing", defaults.sharing), "sharing", SHARING_MODES),
            workers=_int(raw.get("workers"), "workers", 1, optional=True),
            task=_parse_task(_section(raw, "task")),
            model=_parse_model(_section(raw, "model")),
            loss=_parse_loss(_section(raw, "loss")),
            optimizer=_parse_optimizer(_section(raw, "optimizer")),
            ablation=_parse_ablation(_section(raw, "ablation")),
            frontier=_parse_frontier(_section(raw, "frontier")),
        )
        if not config.task.temperature > 0:
            raise ConfigError(f"task.temperature must be > 0, got {config.task.temperature}")
        # Cross-field checks live on the domain types.
        config.dims
        config.loss.weights()
        config.loss.schedule()
    except ContractError as e:
        raise ConfigError(e.message) from e

    if len(set(config.seed_list)) != len(config.seed_list):
        raise ConfigError(f"seeds must be unique, got {list(config.seeds)}")
    return config


def load_run_config(config_path: Path) -> RunConfig:
    """
    Read and validate a run config file.

    Args:
        config_path: A .json, .yml or .yaml file. Relative paths inside it resolve against its directory.

    Returns:
        The validated RunConfig.
    """
    config_path = Path(config_path)
    if not config_path.exists():
        raise ConfigError(
            f"Config file not found: {config_path}",
            fix_instructions=["Pass an existing file with --config (see configs/default.json)"],
        )
    try:
        raw = load_document(config_path)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return parse_run_config(raw, base_dir=config_path.parent.resolve())


def resolve_with_precedence(
    key: str,
    cli_value: Optional[Any],
    config_value: Optional[Any],
    env_value: Optional[Any],
    default_value: Optional[Any],
) -> Tuple[Optional[Any], Optional[str]]:
    """Pick CLI > config > environment > default and describe the choice."""
    if cli_value is not None:
        if config_value is not None:
            return cli_value, f"Using {key}={cli_value} from CLI flag (overrides config: {config_value})."
        if env_value is not None:
            return cli_value, f"Using {key}={cli_value} from CLI flag (overrides env: {env_value})."
        return cli_value, f"Using {key}={cli_value} from CLI flag."

    if config_value is not None:
        if env_value is not None:
            return config_value, f"Using {key}={config_value} from config (overrides env: {env_value})."
        return config_value, f"Using {key}={config_value} from config."

    if env_value is not None:
        return env_value, f"Using {key}={env_value} from environment."

    return default_value, None


def resolve_output_dir(cli_value: Optional[str], config: RunConfig) -> Tuple[Path, Optional[str]]:
    env_value = resolve_setting("MATTA_OUTPUT_DIR")
    value, note = resolve_with_precedence(
        "output_dir",
        Path(cli_value) if cli_value else None,
        config.output_dir,
        Path(env_value) if env_value else None,
        Path(DEFAULT_OUTPUT_DIR),
    )
    return Path(value), note


def resolve_workers(cli_value: Optional[int], config: RunConfig) -> Tuple[int, Optional[str]]:
    env_value = resolve_setting("MATTA_WORKERS")
    env_workers = None
    if env_value is not None:
        try:
            env_workers = int(env_value)
        except ValueError:
            raise ConfigError(f"MATTA_WORKERS must be an integer, got {env_value!r}") from None
    value, note = resolve_with_precedence("workers", cli_value, config.workers, env_workers, DEFAULT_WORKERS)
    if int(value) < 1:
        raise ConfigError(f"workers must be >= 1, got {value}")
    return int(value), note
