"""
Bona-Smith regularization: mollified data exp(-eps^(1/10) k^2) u_hat and the
convergence of the corresponding solutions as eps -> 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from kdv5_control.evolution.linear import LinearFlow, LinearModel, evolve_linear
from kdv5_control.spectral.grid import SpectralField
from kdv5_control.spectral.multipliers import mollify
from kdv5_control.spectral.norms import sobolev_norm
from kdv5_control.spectral.trajectory import zst_norm

logger = logging.getLogger(__name__)


def mollifier_bound(gamma: float) -> float:
    """Bound on eps^(gamma/10) (1+k^2)^(gamma/2) exp(-eps^(1/10) k^2) over k and eps <= 1.

    With z = eps^(1/10) k^2 the quantity is at most (1+z)^(gamma/2) e^(-z),
    which peaks at z = 0 for gamma <= 2 and at 1+z = gamma/2 otherwise.
    """
    if gamma <= 2.0:
        return 1.0
    return math.e * (gamma / (2.0 * math.e)) ** (gamma / 2.0)


def mollifier_constants(
    u: SpectralField, gamma: float, epsilons: Sequence[float], s: float
) -> np.ndarray:
    """eps^(gamma/10) ||mollify(u, eps)||_{s+gamma} / ||u||_s for each eps."""
    base = sobolev_norm(u, s)
    if base == 0.0:
        return np.zeros(len(epsilons))
    return np.array(
        [eps ** (gamma / 10.0) * sobolev_norm(mollify(u, eps), s + gamma) / base for eps in epsilons]
    )


@dataclass(frozen=True)
class BonaSmithStudy:
    epsilons: List[float]
    distances: List[float]
    reference_norm: float

    @property
    def monotone(self) -> bool:
        """Distances decrease as eps decreases (epsilons listed from large to small)."""
        return all(b <= a for a, b in zip(self.distances, self.distances[1:]))

    def to_dict(self) -> dict:
        return {
            "epsilons": self.epsilons,
            "distances": self.distances,
            "reference_norm": self.reference_norm,
            "monotone": self.monotone,
        }


def bona_smith_study(
    model: LinearModel,
    v0: SpectralField,
    epsilons: Sequence[float],
    T: float,
    dt: float,
    s: float,
) -> BonaSmithStudy:
    """Z_{s,T} distance between solutions from mollified and original data."""
    flow = LinearFlow.forward(model)
    reference = evolve_linear(model, v0, None, T, dt, flow=flow)
    distances = []
    for eps in sorted(epsilons, reverse=True):
        mollified = evolve_linear(model, mollify(v0, eps), None, T, dt, flow=flow)
        distances.append(zst_norm(mollified - reference, s, model.order_l))
        logger.debug(f"Bona-Smith eps={eps:.1e}: Z-distance {distances[-1]:.6e}")
    return BonaSmithStudy(
        epsilons=sorted((float(e) for e in epsilons), reverse=True),
        distances=distances,
        reference_norm=zst_norm(reference, s, model.order_l),
    )
