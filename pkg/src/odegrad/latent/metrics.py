"""Forecast error metrics."""

from typing import Protocol

import numpy as np

from odegrad.core.exceptions import DimensionError
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.latent.spirals import IrregularDataset


class Forecaster(Protocol):
    def predict(self, data: IrregularDataset, query_times: Tensor) -> Tensor:
        """Predicted means (n, H, obs_dim) at query_times."""


def rmse(predicted: Tensor, truth: Tensor) -> float:
    predicted, truth = as_tensor(predicted), as_tensor(truth)
    if predicted.shape != truth.shape:
        raise DimensionError("rmse", truth.shape, predicted.shape)
    return float(np.sqrt(np.mean((predicted - truth) ** 2)))


def predictive_rmse(
    model: Forecaster, data: IrregularDataset, horizon_times: Tensor, truth: Tensor
) -> float:
    """RMSE of forecasts from the observed data against noise-free truth (n, H, obs_dim).

    Averaged over trajectories, dimensions and horizon times.
    """
    return rmse(model.predict(data, horizon_times), truth)
