"""Butcher tableaux of the explicit Runge-Kutta methods."""

from dataclasses import dataclass

import numpy as np

from odegrad.core.tensor import Tensor


@dataclass(frozen=True)
class Tableau:
    """Explicit Runge-Kutta coefficients.

    ``error`` holds b - b_hat of the embedded pair (None for methods without one).
    ``fsal`` marks methods whose last stage is f at the new state.
    """

    name: str
    order: int
    c: Tensor
    a: tuple[Tensor, ...]
    b: Tensor
    error: Tensor | None = None
    fsal: bool = False

    @property
    def stages(self) -> int:
        return len(self.c)


EULER = Tableau("euler", 1, np.array([0.0]), (), np.array([1.0]))

RK4 = Tableau(
    "rk4",
    4,
    np.array([0.0, 0.5, 0.5, 1.0]),
    (np.array([0.5]), np.array([0.0, 0.5]), np.array([0.0, 0.0, 1.0])),
    np.array([1 / 6, 1 / 3, 1 / 3, 1 / 6]),
)

DOPRI5 = Tableau(
    "dopri5",
    5,
    np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0]),
    (
        np.array([1 / 5]),
        np.array([3 / 40, 9 / 40]),
        np.array([44 / 45, -56 / 15, 32 / 9]),
        np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
        np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
        np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
    ),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0]),
    error=np.array(
        [
            71 / 57600,
            0.0,
            -71 / 16695,
            71 / 1920,
            -17253 / 339200,
            22 / 525,
            -1 / 40,
        ]
    ),
    fsal=True,
)

TABLEAUX = {t.name: t for t in (EULER, RK4, DOPRI5)}
