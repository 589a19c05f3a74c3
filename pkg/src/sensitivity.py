"""Derivative-based global sensitivity indices from observed gradients."""
import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)


@dataclass
class SensitivityResult:
    S: np.ndarray
    s_hat: np.ndarray
    ranking: np.ndarray  # 0-based dimension indices, most important first

    @property
    def most_important(self) -> int:
        return int(self.ranking[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "S": self.S.tolist(),
            "s_hat": self.s_hat.tolist(),
            "ranking": [int(k) + 1 for k in self.ranking],
        }


def estimate_indices(gradients) -> SensitivityResult:
    """Monte Carlo estimate S_k = mean_i (dg/dx_k at site i)^2 under a uniform density.

    Gradients must be with respect to unit-cube coordinates.
    """
    G = np.asarray(gradients, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    if G.ndim != 2 or G.shape[0] == 0 or G.shape[1] == 0:
        raise InputError("Sensitivity estimation needs a non-empty N x n gradient matrix")
    if not np.all(np.isfinite(G)):
        raise InputError("Gradients must be finite")

    n = G.shape[1]
    S = np.mean(G * G, axis=0)
    total = S.sum()
    if total > 0:
        s_hat = S / total
    else:
        logger.warning("All sensitivity indices are zero; using uniform weights")
        s_hat = np.full(n, 1.0 / n)
    # stable sort on -s_hat keeps ascending index order among ties
    ranking = np.argsort(-s_hat, kind="stable")
    logger.debug(f"Sensitivity ranking: {ranking[:10].tolist()}")
    return SensitivityResult(S=S, s_hat=s_hat, ranking=ranking)
