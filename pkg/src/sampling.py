"""Latin hypercube designs and the affine map between a box domain and [0,1]^n."""
import logging
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)


@dataclass
class DomainBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise InputError("Box bounds must be vectors of equal length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise InputError("Box bounds must be finite")
        if np.any(self.lower >= self.upper):
            raise InputError(f"Box requires lower < upper in every dimension: {self.lower} / {self.upper}")

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @classmethod
    def unit(cls, n: int) -> "DomainBox":
        return cls(np.zeros(n), np.ones(n))

    def to_dict(self) -> Dict[str, List[float]]:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, List[float]]) -> "DomainBox":
        return cls(data["lower"], data["upper"])


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; the stream for a given seed is identical on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def lhs(n: int, N: int, seed: int) -> np.ndarray:
    """Latin hypercube design of N points in [0,1]^n.

    Each column is an independent random permutation of the N strata with a
    uniform jitter inside each stratum. Columns are drawn in order, the
    permutation before the jitter.
    """
    if n < 1 or N < 1:
        raise InputError(f"Latin hypercube needs n >= 1 and N >= 1 (got n={n}, N={N})")
    rng = make_rng(seed)
    design = np.empty((N, n))
    for k in range(n):
        strata = rng.permutation(N)
        design[:, k] = (strata + rng.random(N)) / N
    return design


def _as_points(x, box: DomainBox) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != box.dimension:
        raise InputError(f"Point dimension {x.shape[-1]} does not match box dimension {box.dimension}")
    return x


def to_unit(x_phys, box: DomainBox) -> np.ndarray:
    x_phys = _as_points(x_phys, box)
    if np.any(x_phys < box.lower) or np.any(x_phys > box.upper):
        logger.warning("Point(s) outside the domain box; extrapolating")
    return (x_phys - box.lower) / box.width


def from_unit(x_unit, box: DomainBox) -> np.ndarray:
    x_unit = _as_points(x_unit, box)
    if np.any(x_unit < 0) or np.any(x_unit > 1):
        logger.warning("Point(s) outside the unit cube; extrapolating")
    return box.lower + x_unit * box.width


def grad_to_unit(g_phys, box: DomainBox) -> np.ndarray:
    """Chain rule: d f/d u_k = d f/d x_k * (upper_k - lower_k)."""
    return _as_points(g_phys, box) * box.width
