"""Solver configuration and trajectory records."""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from odegrad.core.tensor import Tensor

# Constants
DEFAULT_TOLERANCE = 1.5e-8
DEFAULT_MAX_STEPS = 100_000
DEFAULT_SAFETY = 0.9
MIN_STEP_FACTOR = 0.2
MAX_STEP_FACTOR = 5.0


class SolveConfig(BaseModel):
    """Integration method and its accuracy controls."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Literal["euler", "rk4", "dopri5"] = "dopri5"
    rtol: float = Field(default=DEFAULT_TOLERANCE, gt=0)
    atol: float = Field(default=DEFAULT_TOLERANCE, gt=0)
    step_size: float = Field(default=0.01, gt=0)  # fixed-step methods and non-adaptive dopri5
    first_step: float | None = Field(default=None, gt=0)
    max_steps: int = Field(default=DEFAULT_MAX_STEPS, ge=1)
    safety: float = Field(default=DEFAULT_SAFETY, gt=0, le=1)
    adaptive: bool = True
    record_steps: bool = False  # keep every accepted step in the trajectory

    @property
    def is_adaptive(self) -> bool:
        return self.method == "dopri5" and self.adaptive

    def with_tolerance(self, rtol: float, atol: float | None = None) -> "SolveConfig":
        return self.model_copy(update={"rtol": rtol, "atol": rtol if atol is None else atol})


@dataclass
class SolverStats:
    """Step bookkeeping of one or more solves."""

    accepted: int = 0
    rejected: int = 0
    error_norms: list[float] = field(default_factory=list)
    rejections: list[tuple[float, float]] = field(default_factory=list)

    def merge(self, other: "SolverStats") -> None:
        self.accepted += other.accepted
        self.rejected += other.rejected
        self.error_norms.extend(other.error_norms)
        self.rejections.extend(other.rejections)


@dataclass(frozen=True)
class Trajectory:
    """States of an integration at strictly monotone times, with the evaluation count."""

    times: Tensor
    states: Tensor
    nfe: int
    stats: SolverStats = field(default_factory=SolverStats)

    @property
    def final(self) -> Tensor:
        return self.states[-1]

    @property
    def state_dim(self) -> int:
        return int(np.prod(self.states.shape[1:]))

    def __len__(self) -> int:
        return len(self.times)
