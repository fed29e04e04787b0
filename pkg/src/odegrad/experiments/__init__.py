"""Experiment harness: configuration, run writers, plots and one runner per subcommand."""

from odegrad.experiments.cnf import run_cnf
from odegrad.experiments.config import (
    CONFIG_TYPES,
    SEED_ENV,
    CnfConfig,
    ExperimentConfig,
    GradcheckConfig,
    Odenet2dConfig,
    PoissonConfig,
    SpiralsConfig,
    load_config,
    parse_config_text,
    parse_overrides,
)
from odegrad.experiments.gradcheck import GRADCHECK_HEADER, GradcheckReport, run_gradcheck
from odegrad.experiments.odenet2d import RingsClassifier, make_rings, run_odenet2d
from odegrad.experiments.plots import Series, emit_svg
from odegrad.experiments.poisson import run_poisson
from odegrad.experiments.spirals import run_spirals
from odegrad.experiments.writer import METRICS_HEADER, MetricsRow, RunWriter

RUNNERS = {
    "gradcheck": run_gradcheck,
    "odenet2d": run_odenet2d,
    "cnf": run_cnf,
    "spirals": run_spirals,
    "poisson": run_poisson,
}

__all__ = [
    "CONFIG_TYPES",
    "GRADCHECK_HEADER",
    "METRICS_HEADER",
    "RUNNERS",
    "SEED_ENV",
    "CnfConfig",
    "ExperimentConfig",
    "GradcheckConfig",
    "GradcheckReport",
    "MetricsRow",
    "Odenet2dConfig",
    "PoissonConfig",
    "RingsClassifier",
    "RunWriter",
    "Series",
    "SpiralsConfig",
    "emit_svg",
    "load_config",
    "make_rings",
    "parse_config_text",
    "parse_overrides",
    "run_cnf",
    "run_gradcheck",
    "run_odenet2d",
    "run_poisson",
    "run_spirals",
]
