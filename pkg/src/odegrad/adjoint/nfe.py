"""Forward/backward evaluation-count reports."""

from pydantic import BaseModel

from odegrad.solvers.config import Trajectory


class NfeReport(BaseModel):
    """Raw solver evaluation counts of a forward and a reverse pass."""

    nfe_f: int
    nfe_b: int
    ratio: float | None


def nfe_report(forward: Trajectory | int, backward: Trajectory | int) -> NfeReport:
    """Counts and backward/forward ratio (None when the forward pass did no evaluations)."""
    nfe_f = forward.nfe if isinstance(forward, Trajectory) else int(forward)
    nfe_b = backward.nfe if isinstance(backward, Trajectory) else int(backward)
    return NfeReport(nfe_f=nfe_f, nfe_b=nfe_b, ratio=nfe_b / nfe_f if nfe_f else None)
