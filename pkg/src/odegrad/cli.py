"""CLI interface for the odegrad experiment harness."""

import logging
import sys
from pathlib import Path

import click

from odegrad import __version__
from odegrad.core.exceptions import (
    ArgumentError,
    CheckFailure,
    DivergenceError,
    NonFiniteError,
    TrainingDivergenceError,
)
from odegrad.core.log import VERBOSE
from odegrad.experiments import RUNNERS, RunWriter, load_config, parse_overrides

logging.basicConfig(
    level=logging.WARNING,
    format="[%(asctime)s] %(levelname)-8s %(message)s",
    datefmt="%H:%M:%S",
    stream=sys.stdout,
)

logger = logging.getLogger(__name__)

EXPERIMENT_HELP = {
    "gradcheck": "Check VJPs and adjoint gradients against finite differences and RK4 backprop.",
    "odenet2d": "Train an ODE-block classifier on concentric rings and sweep solver tolerances.",
    "cnf": "Train a continuous normalizing flow by density matching or maximum likelihood.",
    "spirals": "Compare latent ODE and RNN extrapolation on irregularly sampled spirals.",
    "poisson": "Fit a latent ODE intensity to synthetic events with a Poisson likelihood.",
}
FAILURES = (CheckFailure, TrainingDivergenceError, DivergenceError, NonFiniteError)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__, prog_name="odegrad")
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    help="Show per-iteration and per-solve details (VERBOSE level)",
)
@click.option(
    "--debug",
    "-d",
    is_flag=True,
    help="Show debug information (includes verbose + DEBUG level)",
)
@click.option(
    "--quiet",
    "-q",
    is_flag=True,
    help="Show only warnings and errors",
)
def main(verbose: bool, debug: bool, quiet: bool) -> None:
    """Experiments for differentiable ODE solvers.

    Every subcommand accepts --config FILE (flat key = value lines) and any
    setting as --key value; ODEGRAD_SEED sets the default seed.
    """
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    if quiet:
        logging.getLogger().setLevel(logging.WARNING)
    elif debug:
        logging.getLogger().setLevel(logging.DEBUG)
    elif verbose:
        logging.getLogger().setLevel(VERBOSE)
    else:
        logging.getLogger().setLevel(logging.INFO)


def run_experiment(
    experiment: str,
    config_path: Path | None,
    seed: int | None,
    output: Path | None,
    extra_args: list[str],
) -> None:
    """Resolve the configuration, run one experiment and map failures to exit codes.

    Exit codes: 0 success, 1 check/training/solver failure, 2 usage or config error.
    """
    try:
        overrides = parse_overrides(extra_args)
        if seed is not None:
            overrides["seed"] = seed
        if output is not None:
            overrides["output"] = output
        config = load_config(experiment, config_path, overrides)
    except ArgumentError as e:
        raise click.UsageError(str(e)) from e

    writer = RunWriter(config.run_dir, experiment, config.record_timing)
    writer.write_config(config)
    logger.info(f"Running {experiment} (seed {config.seed}) -> {writer.output_dir}")
    try:
        RUNNERS[experiment](config, writer)
    except ArgumentError as e:
        raise click.UsageError(str(e)) from e
    except KeyboardInterrupt:
        logger.warning(f"{experiment} interrupted by user")
        sys.exit(1)
    except FAILURES as e:
        logger.error(f"✗ {experiment} failed: {e}")
        sys.exit(1)
    except Exception as e:
        logger.error(f"✗ {experiment} failed: {e}")
        logger.exception(f"{experiment} failed")
        sys.exit(1)
    finally:
        writer.close()
    logger.info(f"✓ {experiment} completed successfully")


def _experiment_command(experiment: str) -> click.Command:
    @main.command(
        name=experiment,
        help=EXPERIMENT_HELP[experiment],
        context_settings={"ignore_unknown_options": True, "allow_extra_args": True},
    )
    @click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="Flat key = value configuration file",
    )
    @click.option(
        "--seed",
        type=int,
        default=None,
        help="Random seed (overrides the config file and ODEGRAD_SEED)",
    )
    @click.option(
        "--output",
        "-o",
        type=click.Path(file_okay=False, path_type=Path),
        default=None,
        help="Run directory (default: ./runs/<experiment>)",
    )
    @click.pass_context
    def command(
        ctx: click.Context, config_path: Path | None, seed: int | None, output: Path | None
    ) -> None:
        run_experiment(experiment, config_path, seed, output, list(ctx.args))

    return command


for _name in RUNNERS:
    _experiment_command(_name)


if __name__ == "__main__":
    main()
