"""Slice partitioning and the k-appendant sliced likelihood.

The training set is cut into m consecutive slices along one input. The full
likelihood f(y) is approximated by keeping joint factors over windows of k
consecutive slices and dividing out their overlaps:

    f(y) ~ prod_i f(y_i, ..., y_{i+k-1}) / prod_i f(y_{i+1}, ..., y_{i+k-1})

Every overlap window is the leading part of a numerator window when the
slices are stacked in order, so its Cholesky factor is the leading block of
the numerator's factor and costs nothing extra.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InfeasibleError, InputError, SlicingError, UndefinedResultError
from .gek import (SampleSet, cholesky_with_nugget, concentrated_likelihood, correlation_block,
                  full_log_likelihood, regression_vector)
from .kernels import KernelParams
from .sensitivity import SensitivityResult

logger = logging.getLogger(__name__)

DEFAULT_SLICES = 10


@dataclass(frozen=True)
class SliceLayout:
    m: int
    dim: int
    boundaries: np.ndarray
    members: Tuple[np.ndarray, ...]
    sizes: Tuple[int, ...]

    def summary(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "dim": self.dim + 1,
            "sizes": list(self.sizes),
            "boundaries": self.boundaries.tolist(),
        }


@dataclass
class SliceConfig:
    """How SGE-Kriging slices its training set; m=None picks the default for N."""
    m: Optional[int] = None
    appendant: int = 2
    dim: Optional[int] = None

    def __post_init__(self):
        if self.appendant < 2:
            raise InputError(f"appendant must be at least 2, got {self.appendant}")
        if self.m is not None and self.m < 1:
            raise InputError(f"Slice count must be positive, got {self.m}")


def resolve_slice_count(N: int, m: Optional[int] = None) -> int:
    """Explicit m is used as given; the default of 10 shrinks to keep two samples per slice."""
    if m is not None:
        return m
    m = DEFAULT_SLICES
    if N < 2 * m:
        m = min(N, max(2, N // 2))
        logger.warning(f"Only {N} samples: reducing slice count to {m}")
    return m


def partition(data: SampleSet, dim: int, m: int) -> SliceLayout:
    """Split sites into m balanced slices ordered along coordinate ``dim``."""
    N = data.N
    if not 0 <= dim < data.n:
        raise InputError(f"Slicing dimension {dim} out of range for n={data.n}")
    if not 1 <= m <= N:
        raise InputError(f"Slice count must satisfy 1 <= m <= N (m={m}, N={N})")

    coords = data.X[:, dim]
    order = np.argsort(coords, kind="stable")
    base, extra = divmod(N, m)
    sizes = tuple(base + 1 if i < extra else base for i in range(m))
    cuts = np.cumsum(sizes)[:-1]
    members = tuple(np.split(order, cuts))
    sorted_coords = coords[order]
    inner = [(sorted_coords[c - 1] + sorted_coords[c]) / 2.0 for c in cuts]
    boundaries = np.array([0.0] + inner + [1.0])
    logger.debug(f"Partitioned {N} samples into {m} slices along x_{dim + 1}: sizes {sizes}")
    return SliceLayout(m=m, dim=dim, boundaries=boundaries, members=members, sizes=sizes)


def make_layout(data: SampleSet, sens: SensitivityResult, config: SliceConfig) -> SliceLayout:
    dim = sens.most_important if config.dim is None else config.dim
    m = resolve_slice_count(data.N, config.m)
    if m < config.appendant:
        raise SlicingError(f"{config.appendant}-appendant slicing needs at least {config.appendant} slices, "
                           f"got m={m}")
    return partition(data, dim, m)


class _Window(NamedTuple):
    v: np.ndarray       # L^-1 y
    u: np.ndarray       # L^-1 F
    log_diag: np.ndarray
    overlap: int        # leading rows shared with the previous window, 0 if none


def _windows(layout: SliceLayout, appendant: int) -> List[Tuple[List[int], int]]:
    """Numerator windows as (slice indices, number of leading overlap slices)."""
    if layout.m < appendant:
        raise SlicingError(f"{appendant}-appendant likelihood needs at least {appendant} slices, "
                           f"got m={layout.m}")
    count = layout.m - appendant + 1
    return [(list(range(i, i + appendant)), 0 if i == 0 else appendant - 1) for i in range(count)]


def _evaluate_windows(theta: np.ndarray, data: SampleSet, layout: SliceLayout, appendant: int) -> List[_Window]:
    n = data.n
    sites = [data.X[idx] for idx in layout.members]
    blocks: Dict[Tuple[int, int], np.ndarray] = {}

    def block(a: int, b: int) -> np.ndarray:
        if a > b:
            return block(b, a).T
        if (a, b) not in blocks:
            blocks[(a, b)] = correlation_block(sites[a], sites[b], theta, True)
        return blocks[(a, b)]

    windows = []
    for slices, overlap_slices in _windows(layout, appendant):
        R = np.block([[block(a, b) for b in slices] for a in slices])
        y = np.concatenate([data.response_vector(True, layout.members[a]) for a in slices])
        F = np.concatenate([regression_vector(layout.sizes[a], n, True) for a in slices])
        L, nugget = cholesky_with_nugget(R)
        if nugget > 0:
            logger.debug(f"Window {slices[0]}..{slices[-1]} needed nugget {nugget:g}")
        v = solve_triangular(L, y, lower=True, check_finite=False)
        u = solve_triangular(L, F, lower=True, check_finite=False)
        overlap = sum(layout.sizes[a] for a in slices[:overlap_slices]) * (n + 1)
        windows.append(_Window(v, u, np.log(np.diag(L)), overlap))
    return windows


class SlicedProfile(NamedTuple):
    beta0: float
    sigma2: float
    log_det: float


def _profile(windows: List[_Window], size: int) -> SlicedProfile:
    """Signed sums over numerator windows minus their overlaps."""
    FRF = FRy = 0.0
    for w in windows:
        FRF += w.u @ w.u - w.u[:w.overlap] @ w.u[:w.overlap]
        FRy += w.u @ w.v - w.u[:w.overlap] @ w.v[:w.overlap]
    if not FRF > 0:
        raise InfeasibleError("Sliced regression normal scalar is not positive")
    beta0 = FRy / FRF
    quad = 0.0
    logdet = 0.0
    for w in windows:
        r = w.v - beta0 * w.u
        quad += r @ r - r[:w.overlap] @ r[:w.overlap]
        logdet += 2.0 * (w.log_diag.sum() - w.log_diag[:w.overlap].sum())
    return SlicedProfile(float(beta0), float(quad / size), float(logdet))


def _theta(theta) -> np.ndarray:
    return theta.theta if isinstance(theta, KernelParams) else KernelParams(theta).theta


def sliced_profile(theta, data: SampleSet, layout: SliceLayout, appendant: int = 2) -> Tuple[float, float]:
    """Sliced optimal (beta0, sigma2); sigma2 may come out negative for poor theta."""
    windows = _evaluate_windows(_theta(theta), data, layout, appendant)
    profile = _profile(windows, data.N * (data.n + 1))
    return profile.beta0, profile.sigma2


def sliced_log_likelihood(theta, data: SampleSet, layout: SliceLayout, appendant: int = 2) -> float:
    """(n+1)N ln sigma2 + sum ln det(windows) - sum ln det(overlaps); +inf if infeasible."""
    if appendant < 2:
        raise InputError(f"appendant must be at least 2, got {appendant}")
    try:
        windows = _evaluate_windows(_theta(theta), data, layout, appendant)
        profile = _profile(windows, data.N * (data.n + 1))
    except InfeasibleError as e:
        logger.debug(f"Sliced likelihood infeasible: {e}")
        return np.inf
    return concentrated_likelihood(profile.sigma2, data.N * (data.n + 1), profile.log_det)


def likelihood_gap(theta, data: SampleSet, layout: SliceLayout, appendant: int = 2) -> float:
    """Full minus sliced concentrated likelihood at theta (diagnostic)."""
    full = full_log_likelihood(theta, data, True)
    approx = sliced_log_likelihood(theta, data, layout, appendant)
    if not (np.isfinite(full) and np.isfinite(approx)):
        raise UndefinedResultError(f"Likelihood gap undefined: full={full}, sliced={approx}")
    return full - approx


def cost_ratio(m: int) -> float:
    """Cholesky cost of the full system over the 2-appendant sliced one: m^3 / (9m - 10)."""
    if m < 2:
        raise InputError(f"Cost ratio needs m >= 2, got {m}")
    return m ** 3 / (9 * m - 10)


def likelihood_profile(data: SampleSet, thetas, layout: Optional[SliceLayout] = None,
                       appendant: int = 2) -> np.ndarray:
    """Full (and sliced, if a layout is given) likelihood along isotropic theta values.

    Returns an array with columns theta, full, sliced (NaN without a layout).
    """
    rows = []
    for t in np.asarray(thetas, dtype=float):
        theta = np.full(data.n, t)
        full = full_log_likelihood(theta, data, True)
        approx = sliced_log_likelihood(theta, data, layout, appendant) if layout is not None else np.nan
        rows.append((t, full, approx))
    return np.array(rows).reshape(-1, 3)
