"""Result containers shared by the exact engine and the oracles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    """Smoothed posteriors over a horizon of ``M`` slices.

    ``changepoint[k]`` (persistent nodes) has ``M + 1`` entries summing to 1.
    ``marginals[k][t - 1]`` is ``P(X_k^t = 1 | evidence)`` for every hidden node.
    """

    horizon: int
    changepoint: dict[str, np.ndarray]
    marginals: dict[str, np.ndarray]
    log_likelihood: float
    normalizers: dict[str, float] = field(default_factory=dict)
    op_count: int = 0

    @property
    def likelihood(self) -> float:
        return float(np.exp(self.log_likelihood))

    def marginal(self, node: str, t: int) -> float:
        return float(self.marginals[node][t - 1])


@dataclass(frozen=True)
class ZeroEvidenceProbability:
    """Returned instead of a posterior when the evidence has probability zero."""

    reason: str = "evidence has probability zero under the model"
    op_count: int = 0

    @property
    def log_likelihood(self) -> float:
        return -np.inf


def marginals_from_changepoint(post: np.ndarray) -> np.ndarray:
    """``P(X^t = 1) = P(j < t)`` for ``t = 1..M``."""
    return np.minimum(np.cumsum(post)[:-1], 1.0)
