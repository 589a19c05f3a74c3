"""Biquadratic spline correlation and its tensor-product extension.

The one-dimensional correlation is written in terms of xi = theta * |x - xhat|
and has compact support on xi < 1, with an interior knot at xi = 0.4:

    R(xi) = 1 - 15 xi^2 + 35 xi^3 - 195/8 xi^4                 0   <= xi < 0.4
    R(xi) = 5/3 - 20/3 xi + 10 xi^2 - 20/3 xi^3 + 5/3 xi^4      0.4 <= xi < 1
    R(xi) = 0                                                  1   <= xi

All functions here are pure; matrix level caching lives in ``gek``.
"""
import logging
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

KNOT = 0.4
THETA_LOWER = 0.001
THETA_UPPER = 10.0


@dataclass
class KernelParams:
    """Correlation hyper-parameters for inputs scaled to the unit cube."""
    theta: np.ndarray
    lower_bound: float = THETA_LOWER
    upper_bound: float = THETA_UPPER
    dimension: int = field(init=False)

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float)).copy()
        if self.theta.ndim != 1 or self.theta.size == 0:
            raise InputError("theta must be a non-empty vector")
        if not 0 < self.lower_bound < self.upper_bound:
            raise InputError(f"Invalid theta bounds [{self.lower_bound}, {self.upper_bound}]")
        if not np.all(np.isfinite(self.theta)):
            raise InputError("theta contains non-finite values")
        if np.any(self.theta < self.lower_bound) or np.any(self.theta > self.upper_bound):
            raise InputError(f"theta outside [{self.lower_bound}, {self.upper_bound}]: {self.theta}")
        self.dimension = self.theta.size

    @classmethod
    def clipped(cls, theta, lower_bound: float = THETA_LOWER, upper_bound: float = THETA_UPPER) -> "KernelParams":
        return cls(np.clip(np.asarray(theta, dtype=float), lower_bound, upper_bound), lower_bound, upper_bound)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return (np.full(self.dimension, self.lower_bound), np.full(self.dimension, self.upper_bound))


def _check_finite(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    return arr


def _check_theta(theta: ArrayLike) -> np.ndarray:
    arr = _check_finite("theta", theta)
    if np.any(arr <= 0):
        raise InputError("theta must be positive")
    return arr


def _spline(xi: np.ndarray) -> np.ndarray:
    inner = 1.0 + xi * xi * (-15.0 + xi * (35.0 - 24.375 * xi))
    outer = 5.0 / 3.0 + xi * (-20.0 / 3.0 + xi * (10.0 + xi * (-20.0 / 3.0 + 5.0 / 3.0 * xi)))
    return np.select([xi < KNOT, xi < 1.0], [inner, outer], 0.0)


def _spline_dxi(xi: np.ndarray) -> np.ndarray:
    inner = xi * (-30.0 + xi * (105.0 - 97.5 * xi))
    outer = -20.0 / 3.0 + xi * (20.0 + xi * (-20.0 + 20.0 / 3.0 * xi))
    return np.select([xi < KNOT, xi < 1.0], [inner, outer], 0.0)


def _spline_dxi2(xi: np.ndarray) -> np.ndarray:
    inner = -30.0 + xi * (210.0 - 292.5 * xi)
    outer = 20.0 + xi * (-40.0 + 20.0 * xi)
    return np.select([xi < KNOT, xi < 1.0], [inner, outer], 0.0)


def corr_1d(d: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """Correlation at absolute distance ``d``; exactly zero once theta*d >= 1."""
    d = _check_finite("distance", d)
    if np.any(d < 0):
        raise InputError("distance must be non-negative")
    theta = _check_theta(theta)
    out = _spline(theta * d)
    return out if out.ndim else float(out)


def corr_1d_d1(delta: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """dR/dx for the signed difference delta = x - xhat. dR/dxhat is the negative."""
    delta = _check_finite("delta", delta)
    theta = _check_theta(theta)
    out = _spline_dxi(theta * np.abs(delta)) * theta * np.sign(delta)
    return out if out.ndim else float(out)


def corr_1d_d2(d: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """Mixed derivative d2R/(dx dxhat); equals 30*theta^2 at d = 0."""
    d = _check_finite("distance", d)
    theta = _check_theta(theta)
    out = -_spline_dxi2(theta * np.abs(d)) * theta * theta
    return out if out.ndim else float(out)


def _check_pair(x, xhat, params: KernelParams) -> Tuple[np.ndarray, np.ndarray]:
    x = _check_finite("x", np.atleast_1d(x))
    xhat = _check_finite("xhat", np.atleast_1d(xhat))
    if x.shape != (params.dimension,) or xhat.shape != (params.dimension,):
        raise InputError(f"Expected points of dimension {params.dimension}, got {x.shape} and {xhat.shape}")
    return x, xhat


def _check_index(k: int, n: int) -> None:
    if not 0 <= k < n:
        raise InputError(f"Dimension index {k} out of range for n={n}")


def exclusive_product(factors: np.ndarray) -> np.ndarray:
    """Product over the last axis leaving out each entry in turn, without division."""
    ones = np.ones(factors.shape[:-1] + (1,))
    prefix = np.cumprod(np.concatenate([ones, factors[..., :-1]], axis=-1), axis=-1)
    suffix = np.cumprod(np.concatenate([ones, factors[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    return prefix * suffix


def corr_nd(x, xhat, params: KernelParams) -> float:
    x, xhat = _check_pair(x, xhat, params)
    return float(np.prod(_spline(params.theta * np.abs(x - xhat))))


def corr_nd_d1(x, xhat, params: KernelParams, k: int) -> float:
    """dR(x, xhat)/dx_k."""
    x, xhat = _check_pair(x, xhat, params)
    _check_index(k, params.dimension)
    delta = x - xhat
    factors = _spline(params.theta * np.abs(delta))
    factors[k] = _spline_dxi(params.theta[k] * abs(delta[k])) * params.theta[k] * np.sign(delta[k])
    return float(np.prod(factors))


def corr_nd_d2(x, xhat, params: KernelParams, k: int, l: int) -> float:
    """d2R(x, xhat)/(dx_k dxhat_l)."""
    x, xhat = _check_pair(x, xhat, params)
    _check_index(k, params.dimension)
    _check_index(l, params.dimension)
    delta = x - xhat
    theta = params.theta
    xi = theta * np.abs(delta)
    factors = _spline(xi)
    if k == l:
        factors[k] = -_spline_dxi2(xi[k]) * theta[k] ** 2
    else:
        factors[k] = _spline_dxi(xi[k]) * theta[k] * np.sign(delta[k])
        factors[l] = -_spline_dxi(xi[l]) * theta[l] * np.sign(delta[l])
    return float(np.prod(factors))


def pairwise_factors(A: np.ndarray, B: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-dimension factors for every pair of rows of A and B.

    Returns arrays of shape (len(A), len(B), n): the correlation R_k, its
    derivative with respect to the first argument dR_k/dx_k, and the mixed
    derivative d2R_k/(dx_k dxhat_k). Inputs are trusted (assembly hot path).
    """
    delta = A[:, None, :] - B[None, :, :]
    xi = theta * np.abs(delta)
    value = _spline(xi)
    first = _spline_dxi(xi) * theta * np.sign(delta)
    second = -_spline_dxi2(xi) * theta * theta
    return value, first, second
