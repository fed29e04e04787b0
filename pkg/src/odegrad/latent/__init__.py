"""Latent ODE time-series model, Poisson process likelihood and recurrent baselines."""

from odegrad.latent.elbo import ElboResult, elbo, elbo_and_grad, gaussian_kl, union_grid
from odegrad.latent.metrics import Forecaster, predictive_rmse, rmse
from odegrad.latent.model import (
    LatentOdeModel,
    checkpoint_bytes,
    decode_trajectory,
    encode,
    latent_trajectory,
    load_checkpoint,
    save_checkpoint,
)
from odegrad.latent.networks import GruCell
from odegrad.latent.poisson import (
    IntensityDynamics,
    PoissonRateModel,
    PoissonResult,
    homogeneous_events,
    poisson_loglik,
    poisson_loglik_and_grad,
    rate_curve,
    sinusoidal_events,
    sinusoidal_rate,
)
from odegrad.latent.rnn_baseline import RnnBaseline, rnn_baseline, train_rnn_baseline
from odegrad.latent.spirals import (
    CLOCKWISE,
    COUNTER_CLOCKWISE,
    IrregularDataset,
    SpiralDataset,
    generate_spirals,
    subsample,
    write_spirals_csv,
)
from odegrad.latent.training import (
    EpochRecord,
    LatentTrainingResult,
    reconstruct,
    train_latent_ode,
)

__all__ = [
    "CLOCKWISE",
    "COUNTER_CLOCKWISE",
    "ElboResult",
    "EpochRecord",
    "Forecaster",
    "GruCell",
    "IntensityDynamics",
    "IrregularDataset",
    "LatentOdeModel",
    "LatentTrainingResult",
    "PoissonRateModel",
    "PoissonResult",
    "RnnBaseline",
    "SpiralDataset",
    "checkpoint_bytes",
    "decode_trajectory",
    "elbo",
    "elbo_and_grad",
    "encode",
    "gaussian_kl",
    "generate_spirals",
    "homogeneous_events",
    "latent_trajectory",
    "load_checkpoint",
    "poisson_loglik",
    "poisson_loglik_and_grad",
    "predictive_rmse",
    "rate_curve",
    "reconstruct",
    "rmse",
    "rnn_baseline",
    "save_checkpoint",
    "sinusoidal_events",
    "sinusoidal_rate",
    "subsample",
    "train_latent_ode",
    "train_rnn_baseline",
    "union_grid",
    "write_spirals_csv",
]
