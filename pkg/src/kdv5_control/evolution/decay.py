"""Exponential decay fits of ||u(t) - [u0]||_s along a trajectory."""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from kdv5_control.spectral.trajectory import Trajectory

logger = logging.getLogger(__name__)

CONCLUSIVE_RATIO = 0.5


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit ||u(t)||_s ~ C exp(-rate t) ||u0||_s on the tail half."""

    rate: float
    constant: float
    s: float
    final_ratio: float
    conclusive: bool
    degenerate: bool
    predicted_rate: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def fit_decay(traj: Trajectory, s: float, predicted_rate: Optional[float] = None) -> DecayFit:
    """Fit the decay of the mean-free part of a trajectory; never raises."""
    norms = traj.mean_zero().norms(s)
    times = traj.times
    initial = float(norms[0])
    tail = times >= 0.5 * traj.t_final
    positive = tail & (norms > 0.0)
    if initial == 0.0 or np.count_nonzero(positive) < 2:
        logger.warning("Decay fit is degenerate (zero data or too few samples)")
        return DecayFit(
            rate=0.0,
            constant=0.0,
            s=s,
            final_ratio=0.0,
            conclusive=False,
            degenerate=True,
            predicted_rate=predicted_rate,
        )
    slope, intercept = np.polyfit(times[positive], np.log(norms[positive]), 1)
    final_ratio = float(norms[-1]) / initial
    conclusive = final_ratio < CONCLUSIVE_RATIO
    if not conclusive:
        logger.warning(
            f"Decay fit inconclusive: ||u(T)||_s/||u0||_s = {final_ratio:.3g} >= {CONCLUSIVE_RATIO}"
        )
    return DecayFit(
        rate=float(-slope),
        constant=float(math.exp(intercept) / initial),
        s=s,
        final_ratio=final_ratio,
        conclusive=conclusive,
        degenerate=False,
        predicted_rate=predicted_rate,
    )
