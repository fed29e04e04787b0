"""Experiment configuration: flat key = value files with command-line overrides."""

import logging
import os
from pathlib import Path
from types import UnionType
from typing import Any, Literal, Union, get_args, get_origin

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from odegrad.core.exceptions import ArgumentError
from odegrad.core.optim import OptimizerConfig
from odegrad.solvers.config import DEFAULT_TOLERANCE, SolveConfig

logger = logging.getLogger(__name__)

SEED_ENV = "ODEGRAD_SEED"
Architecture = Literal["linear", "mlp", "planar", "gated_planar_sum", "hamiltonian_split"]


def _is_list(annotation: Any) -> bool:
    if get_origin(annotation) in (Union, UnionType):
        return any(_is_list(arg) for arg in get_args(annotation))
    return get_origin(annotation) is list


class ExperimentConfig(BaseModel):
    """Settings shared by every experiment; subclasses add their own fields."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: str
    seed: int = 0
    method: Literal["euler", "rk4", "dopri5"] = "dopri5"
    rtol: float = Field(default=DEFAULT_TOLERANCE, gt=0)
    atol: float = Field(default=DEFAULT_TOLERANCE, gt=0)
    max_steps: int = Field(default=100_000, ge=1)
    lr: float | None = Field(default=None, gt=0)
    output: Path | None = None
    record_timing: bool = False

    @model_validator(mode="before")
    @classmethod
    def _split_lists(cls, data: Any) -> Any:
        """Accept comma-separated strings for list-valued fields."""
        if not isinstance(data, dict):
            return data
        out = dict(data)
        for name, field in cls.model_fields.items():
            value = out.get(name)
            if isinstance(value, str) and _is_list(field.annotation):
                out[name] = [item.strip() for item in value.split(",") if item.strip()]
        return out

    @property
    def run_dir(self) -> Path:
        return self.output if self.output is not None else Path("runs") / self.experiment

    def solve_config(self, **updates: Any) -> SolveConfig:
        """Solver settings from the shared fields, with optional per-call changes."""
        settings = {
            "method": self.method,
            "rtol": self.rtol,
            "atol": self.atol,
            "max_steps": self.max_steps,
        }
        settings.update(updates)
        return SolveConfig(**settings)

    def optimizer(self, name: Literal["adam", "rmsprop"] = "adam") -> OptimizerConfig:
        return OptimizerConfig(name=name, lr=self.lr)


class GradcheckConfig(ExperimentConfig):
    experiment: Literal["gradcheck"] = "gradcheck"
    rtol: float = Field(default=1e-10, gt=0)
    atol: float = Field(default=1e-10, gt=0)
    architectures: list[Architecture] = [
        "linear",
        "mlp",
        "planar",
        "gated_planar_sum",
        "hamiltonian_split",
    ]
    configs_per_architecture: int = Field(default=20, ge=1)
    dim: int = Field(default=2, ge=2)
    hidden: int = Field(default=8, ge=1)
    units: int = Field(default=3, ge=1)
    t0: float = 0.0
    t1: float = 1.0
    fd_eps: float = Field(default=1e-6, gt=0)
    fd_param_samples: int = Field(default=8, ge=1)
    rel_tol: float = Field(default=1e-4, gt=0)
    abs_floor: float = Field(default=1e-7, ge=0)
    direct_steps_log2: int = Field(default=10, ge=1)
    direct_rel_tol: float = Field(default=1e-3, gt=0)


class Odenet2dConfig(ExperimentConfig):
    experiment: Literal["odenet2d"] = "odenet2d"
    rtol: float = Field(default=1e-3, gt=0)
    atol: float = Field(default=1e-3, gt=0)
    lr: float | None = Field(default=1e-2, gt=0)
    block: Literal["odenet", "rknet"] = "odenet"
    hidden_dim: int = Field(default=6, ge=2)
    dyn_hidden: int = Field(default=16, ge=1)
    n_train: int = Field(default=400, ge=2)
    n_test: int = Field(default=400, ge=2)
    iters: int = Field(default=300, ge=0)
    batch_size: int = Field(default=100, ge=1)
    rk_step: float = Field(default=0.125, gt=0)
    sweep_rtols: list[float] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
    reference_rtol: float = Field(default=1e-13, gt=0)


class CnfConfig(ExperimentConfig):
    experiment: Literal["cnf"] = "cnf"
    rtol: float = Field(default=1e-5, gt=0)
    atol: float = Field(default=1e-5, gt=0)
    lr: float | None = Field(default=1e-2, gt=0)
    task: Literal["density", "mle"] = "density"
    dataset: str = "gaussian_mixture"
    units: int = Field(default=32, ge=1)
    iters: int = Field(default=2000, ge=0)
    batch_size: int = Field(default=100, ge=1)
    sweep_units: list[int] = []
    nf_layers: list[int] = []
    nf_iters: int = Field(default=2000, ge=0)
    snapshot_times: list[float] = [0.05]
    n_samples: int = Field(default=500, ge=1)
    grid_resolution: int = Field(default=40, ge=2)
    grid_extent: float = Field(default=4.0, gt=0)
    noise: float = Field(default=0.08, ge=0)


class SpiralsConfig(ExperimentConfig):
    experiment: Literal["spirals"] = "spirals"
    lr: float | None = Field(default=1e-2, gt=0)
    n_traj: int = Field(default=100, ge=2)
    n_test: int = Field(default=100, ge=2)
    n_time: int = Field(default=200, ge=4)
    n_obs: list[int] = [30]
    noise_std: float = Field(default=0.1, ge=0)
    epochs: int = Field(default=100, ge=0)
    rnn_epochs: int = Field(default=100, ge=0)
    batch_size: int = Field(default=50, ge=1)
    latent_dim: int = Field(default=4, ge=1)
    rnn_hidden: int = Field(default=25, ge=1)
    dyn_hidden: int = Field(default=20, ge=1)
    dec_hidden: int = Field(default=20, ge=1)


class PoissonConfig(ExperimentConfig):
    experiment: Literal["poisson"] = "poisson"
    rtol: float = Field(default=1e-6, gt=0)
    atol: float = Field(default=1e-6, gt=0)
    lr: float | None = Field(default=5e-2, gt=0)
    process: Literal["homogeneous", "sinusoidal", "empty"] = "sinusoidal"
    rate: float = Field(default=5.0, gt=0)
    amplitude: float = 3.0
    period: float = Field(default=5.0, gt=0)
    duration: float = Field(default=10.0, gt=0)
    latent_dim: int = Field(default=2, ge=1)
    rate_hidden: int = Field(default=16, ge=1)
    dyn_hidden: int = Field(default=16, ge=1)
    iters: int = Field(default=300, ge=0)
    curve_points: int = Field(default=200, ge=2)


CONFIG_TYPES: dict[str, type[ExperimentConfig]] = {
    "gradcheck": GradcheckConfig,
    "odenet2d": Odenet2dConfig,
    "cnf": CnfConfig,
    "spirals": SpiralsConfig,
    "poisson": PoissonConfig,
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment, blank lines are skipped.

    Raises:
        ArgumentError: If a line has no '=' or an empty key
    """
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise ArgumentError(f"config line {number}: expected 'key = value', got {raw!r}")
        values[key] = value.strip()
    return values


def parse_overrides(args: list[str]) -> dict[str, str]:
    """Turn ``--key value`` / ``--key=value`` pairs into a dict.

    Raises:
        ArgumentError: If an argument is not a --key or a key has no value
    """
    values: dict[str, str] = {}
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith("--") or len(arg) == 2:
            raise ArgumentError(f"unexpected argument {arg!r}; overrides look like --key value")
        key, sep, value = arg[2:].partition("=")
        if not sep:
            if i + 1 >= len(args):
                raise ArgumentError(f"override --{key} has no value")
            value = args[i + 1]
            i += 1
        values[key.replace("-", "_")] = value
        i += 1
    return values


def load_config(
    experiment: str,
    path: Path | None = None,
    overrides: dict[str, Any] | None = None,
    environ: dict[str, str] | None = None,
) -> ExperimentConfig:
    """Resolve an experiment's settings.

    Precedence, lowest first: model defaults, the config file, $ODEGRAD_SEED (seed only),
    command-line overrides.

    Raises:
        ArgumentError: For unknown experiments, unreadable files, unknown keys or invalid values
    """
    try:
        config_type = CONFIG_TYPES[experiment]
    except KeyError:
        raise ArgumentError(f"unknown experiment {experiment!r}") from None

    values: dict[str, Any] = {}
    if path is not None:
        try:
            values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
        except OSError as e:
            raise ArgumentError(f"cannot read config {path}: {e}") from e
    environ = os.environ if environ is None else environ
    if environ.get(SEED_ENV):
        values["seed"] = environ[SEED_ENV]
    values.update(overrides or {})
    values.setdefault("experiment", experiment)

    try:
        config = config_type(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in e.errors()
        )
        raise ArgumentError(f"invalid {experiment} config: {problems}") from e
    logger.debug(f"Resolved config: {config.model_dump()}")
    return config
