"""Kriging and gradient-enhanced Kriging: assembly, profiled likelihood, prediction.

Correlation matrices use the block layout

    [ R00   dR0_1 ... dR0_n ]
    [ dR1_0 d2R11 ... d2R1n ]
    [  ...                  ]

where dR0_k differentiates the second argument, dRk_0 = dR0_k^T and d2Rkl
differentiates the first argument in dimension k and the second in l.
Responses are ordered [y0, dy/dx_1, ..., dy/dx_n] to match.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import pdist

from .data_io import load_json_file, save_json_file
from .errors import InfeasibleError, InputError
from .kernels import KernelParams, exclusive_product, pairwise_factors
from .sampling import DomainBox, grad_to_unit, to_unit

logger = logging.getLogger(__name__)

NUGGET_SCHEDULE = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
SIGMA2_FLOOR = 1e-300
MODEL_SCHEMA = "sgek-model"
MODEL_VERSION = 1


class Variant(str, Enum):
    KRIGING = "Kriging"
    GEK = "GEK"
    SGEK1 = "SGEK-1"
    SGEK2 = "SGEK-2"

    @property
    def uses_gradients(self) -> bool:
        return self is not Variant.KRIGING

    @property
    def is_sliced(self) -> bool:
        return self in (Variant.SGEK1, Variant.SGEK2)

    @classmethod
    def parse(cls, name: str) -> "Variant":
        for variant in cls:
            if variant.value.lower() == str(name).strip().lower():
                return variant
        raise InputError(f"Unknown model variant '{name}'. Available: {[v.value for v in cls]}")


@dataclass
class SampleSet:
    """Training data with inputs (and gradients) in unit-cube coordinates."""
    X: np.ndarray
    y0: np.ndarray
    G: Optional[np.ndarray] = None
    box: Optional[DomainBox] = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y0 = np.asarray(self.y0, dtype=float).ravel()
        N, n = self.X.shape
        if N == 0:
            raise InputError("A sample set needs at least one site")
        if self.y0.shape != (N,):
            raise InputError(f"Expected {N} responses, got {self.y0.shape[0]}")
        if self.G is not None:
            self.G = np.asarray(self.G, dtype=float).reshape(N, n)
        for name, arr in (("X", self.X), ("y0", self.y0), ("G", self.G)):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise InputError(f"Sample set entry {name} contains non-finite values")
        if N > 1 and pdist(self.X).min() <= 0:
            raise InputError("Sample sites must be pairwise distinct")
        if self.box is None:
            self.box = DomainBox.unit(n)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def has_gradients(self) -> bool:
        return self.G is not None

    @classmethod
    def from_physical(cls, X_phys, y, G_phys=None, box: Optional[DomainBox] = None) -> "SampleSet":
        """Rescale physical sites (and gradients, by the chain rule) to the unit cube."""
        X_phys = np.atleast_2d(np.asarray(X_phys, dtype=float))
        if box is None:
            box = DomainBox(X_phys.min(axis=0), X_phys.max(axis=0))
            logger.warning(f"No domain box given; rescaling by the data range {box.lower.tolist()} to "
                           f"{box.upper.tolist()}, so theta and gradients depend on the sample spread")
        G = None if G_phys is None else grad_to_unit(G_phys, box)
        return cls(to_unit(X_phys, box), y, G, box)

    def subset(self, indices) -> "SampleSet":
        indices = np.asarray(indices, dtype=int)
        G = None if self.G is None else self.G[indices]
        return SampleSet(self.X[indices], self.y0[indices], G, self.box)

    def response_vector(self, with_gradients: bool, indices=None) -> np.ndarray:
        idx = slice(None) if indices is None else np.asarray(indices, dtype=int)
        if not with_gradients:
            return self.y0[idx].copy()
        if self.G is None:
            raise InputError("Gradient-enhanced models need gradient observations")
        return np.concatenate([self.y0[idx], self.G[idx].T.ravel()])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "X": self.X.tolist(),
            "y0": self.y0.tolist(),
            "G": None if self.G is None else self.G.tolist(),
            "box": self.box.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SampleSet":
        G = data.get("G")
        return cls(np.asarray(data["X"]), np.asarray(data["y0"]),
                   None if G is None else np.asarray(G), DomainBox.from_dict(data["box"]))


def regression_vector(N: int, n: int, with_gradients: bool) -> np.ndarray:
    """Constant-regression F: ones on the value block, zeros on gradient blocks."""
    F = np.zeros(N * (n + 1) if with_gradients else N)
    F[:N] = 1.0
    return F


def correlation_block(A: np.ndarray, B: np.ndarray, theta: np.ndarray, with_gradients: bool) -> np.ndarray:
    """Correlation between the observations at sites A (rows) and sites B (columns)."""
    value, first, second = pairwise_factors(A, B, theta)
    R00 = np.prod(value, axis=2)
    if not with_gradients:
        return R00

    Na, Nb, n = value.shape
    out = np.empty(((n + 1) * Na, (n + 1) * Nb))
    out[:Na, :Nb] = R00
    excl = exclusive_product(value)
    d_first = first * excl
    for k in range(n):
        rows = slice((k + 1) * Na, (k + 2) * Na)
        out[:Na, (k + 1) * Nb:(k + 2) * Nb] = -d_first[:, :, k]
        out[rows, :Nb] = d_first[:, :, k]
        mixed = value.copy()
        mixed[:, :, k] = first[:, :, k]
        cross = exclusive_product(mixed) * -first
        cross[:, :, k] = second[:, :, k] * excl[:, :, k]
        out[rows, Nb:] = cross.transpose(0, 2, 1).reshape(Na, n * Nb)
    return out


def correlation_vectors(X: np.ndarray, P: np.ndarray, theta: np.ndarray, with_gradients: bool) -> np.ndarray:
    """Columns r(p) for each prediction point p; r(x_j) equals column j of R."""
    value, first, _ = pairwise_factors(X, P, theta)
    r0 = np.prod(value, axis=2)
    if not with_gradients:
        return r0
    dr = first * exclusive_product(value)
    return np.concatenate([r0] + [dr[:, :, k] for k in range(X.shape[1])], axis=0)


def assemble_R(data: SampleSet, params: KernelParams, with_gradients: bool) -> np.ndarray:
    _check_dimension(data, params)
    return correlation_block(data.X, data.X, params.theta, with_gradients)


def assemble_r(x, data: SampleSet, params: KernelParams, with_gradients: bool) -> np.ndarray:
    _check_dimension(data, params)
    x = np.asarray(x, dtype=float)
    if x.shape != (data.n,):
        raise InputError(f"Prediction point must have dimension {data.n}, got shape {x.shape}")
    return correlation_vectors(data.X, x[None, :], params.theta, with_gradients)[:, 0]


def _check_dimension(data: SampleSet, params: KernelParams) -> None:
    if params.dimension != data.n:
        raise InputError(f"theta has dimension {params.dimension}, data has {data.n}")


def cholesky_with_nugget(M: np.ndarray) -> Tuple[np.ndarray, float]:
    """Lower Cholesky factor of M, inflating its diagonal by a relative nugget if needed.

    The nugget multiplies the diagonal entries (M + tau * diag(M)), so value and
    derivative blocks are regularized consistently.
    """
    diagonal = np.diag(M).copy()
    for tau in NUGGET_SCHEDULE:
        candidate = M if tau == 0.0 else M + np.diag(tau * diagonal)
        try:
            L = cholesky(candidate, lower=True, check_finite=False)
        except LinAlgError:
            logger.debug(f"Cholesky failed with nugget {tau:g}")
            continue
        if np.all(np.isfinite(L)) and np.all(np.diag(L) > 0):
            return L, tau
    raise InfeasibleError(f"Cholesky failed up to nugget {NUGGET_SCHEDULE[-1]:g}")


class Profile(NamedTuple):
    beta0: float
    sigma2: float
    weights: np.ndarray   # R^-1 (y - beta0 F)
    Rinv_F: np.ndarray
    F_Rinv_F: float


def profile_beta_sigma(L: np.ndarray, y: np.ndarray, F: np.ndarray) -> Profile:
    """Closed-form optimal beta0 and sigma2 for fixed theta, via the Cholesky factor."""
    Rinv_F = cho_solve((L, True), F, check_finite=False)
    F_Rinv_F = float(F @ Rinv_F)
    if not F_Rinv_F > 0:
        raise InfeasibleError("F^T R^-1 F is not positive")
    beta0 = float(Rinv_F @ y) / F_Rinv_F
    resid = y - beta0 * F
    weights = cho_solve((L, True), resid, check_finite=False)
    sigma2 = float(resid @ weights) / y.size
    return Profile(beta0, sigma2, weights, Rinv_F, F_Rinv_F)


def log_det(L: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def concentrated_likelihood(sigma2: float, size: int, logdet: float) -> float:
    if not np.isfinite(sigma2) or sigma2 < SIGMA2_FLOOR:
        return np.inf
    return size * np.log(sigma2) + logdet


def full_log_likelihood(theta, data: SampleSet, with_gradients: bool) -> float:
    """Concentrated likelihood (n+1)N ln sigma2 + ln det R, to be minimized; +inf if infeasible."""
    params = KernelParams(theta) if not isinstance(theta, KernelParams) else theta
    R = assemble_R(data, params, with_gradients)
    try:
        L, _ = cholesky_with_nugget(R)
        profile = profile_beta_sigma(L, data.response_vector(with_gradients),
                                     regression_vector(data.N, data.n, with_gradients))
    except InfeasibleError as e:
        logger.debug(f"Infeasible theta {params.theta}: {e}")
        return np.inf
    return concentrated_likelihood(profile.sigma2, R.shape[0], log_det(L))


@dataclass
class TrainedSurrogate:
    variant: Variant
    params: KernelParams
    beta0: float
    sigma2: float
    chol_R: np.ndarray
    weights: np.ndarray
    Rinv_F: np.ndarray
    F_Rinv_F: float
    data: SampleSet
    nugget_used: float
    tuning: Dict[str, Any] = field(default_factory=dict)
    outcome: Optional[Any] = field(default=None, repr=False)  # TuningOutcome, not serialized

    @property
    def with_gradients(self) -> bool:
        return self.variant.uses_gradients

    def _points(self, x) -> np.ndarray:
        P = np.atleast_2d(np.asarray(x, dtype=float))
        if P.shape[1] != self.data.n:
            raise InputError(f"Model expects points of dimension {self.data.n}, got {P.shape[1]}")
        return P

    def predict(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at unit-cube points (one per row)."""
        P = self._points(x)
        r = correlation_vectors(self.data.X, P, self.params.theta, self.with_gradients)
        mu = self.beta0 + r.T @ self.weights
        v = solve_triangular(self.chol_R, r, lower=True, check_finite=False)
        correction = (1.0 - self.Rinv_F @ r) ** 2 / self.F_Rinv_F
        s2 = self.sigma2 * (1.0 - np.sum(v * v, axis=0) + correction)
        return mu, np.maximum(s2, 0.0)

    def predict_mean(self, x) -> float:
        return float(self.predict(x)[0][0])

    def predict_variance(self, x) -> float:
        return float(self.predict(x)[1][0])

    def predict_physical(self, x_phys) -> Tuple[np.ndarray, np.ndarray]:
        return self.predict(to_unit(self._points(x_phys), self.data.box))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": MODEL_SCHEMA,
            "version": MODEL_VERSION,
            "variant": self.variant.value,
            "theta": self.params.theta.tolist(),
            "theta_bounds": [self.params.lower_bound, self.params.upper_bound],
            "beta0": self.beta0,
            "sigma2": self.sigma2,
            "nugget": self.nugget_used,
            "training": self.data.to_dict(),
            "tuning": self.tuning,
        }


def fit_surrogate(data: SampleSet, params: KernelParams, variant: Variant,
                  tuning: Optional[Dict[str, Any]] = None) -> TrainedSurrogate:
    """Factor the full correlation matrix at fixed theta and store the predictor state."""
    with_gradients = variant.uses_gradients
    R = assemble_R(data, params, with_gradients)
    L, nugget = cholesky_with_nugget(R)
    profile = profile_beta_sigma(L, data.response_vector(with_gradients),
                                 regression_vector(data.N, data.n, with_gradients))
    if nugget > 0:
        logger.warning(f"Full correlation matrix needed nugget {nugget:g}")
    return TrainedSurrogate(
        variant=variant, params=params, beta0=profile.beta0, sigma2=max(profile.sigma2, 0.0),
        chol_R=L, weights=profile.weights, Rinv_F=profile.Rinv_F, F_Rinv_F=profile.F_Rinv_F,
        data=data, nugget_used=nugget, tuning=dict(tuning or {}),
    )


def train(data: SampleSet, variant, tuner_config=None, slice_config=None) -> TrainedSurrogate:
    """Tune theta for the requested variant, then build the predictor on the full system."""
    # tuners depend on this module's likelihood
    from .tuner import TunerConfig
    from .tuner_factory import TunerFactory

    variant = Variant.parse(variant) if not isinstance(variant, Variant) else variant
    if variant.uses_gradients and not data.has_gradients:
        raise InputError(f"Variant {variant.value} needs gradient observations")
    tuner_config = tuner_config or TunerConfig()
    logger.info(f"Training {variant.value} on N={data.N}, n={data.n}")
    tuner = TunerFactory.create_tuner(variant, tuner_config, slice_config)
    outcome = tuner.tune(data)
    params = KernelParams(outcome.theta, tuner_config.theta_lower, tuner_config.theta_upper)
    model = fit_surrogate(data, params, variant, outcome.to_dict())
    model.outcome = outcome
    logger.info(f"Trained {variant.value}: likelihood {outcome.value:.6g} after "
                f"{outcome.evaluations} evaluations, beta0={model.beta0:.6g}, sigma2={model.sigma2:.6g}")
    return model


def save_model(model: TrainedSurrogate, file_path: str) -> None:
    save_json_file(model.to_dict(), file_path)


def load_model(file_path: str) -> TrainedSurrogate:
    """Rebuild a model from its JSON document, re-factoring R at the stored theta and nugget."""
    doc = load_json_file(file_path)
    if doc.get("schema") != MODEL_SCHEMA or doc.get("version") != MODEL_VERSION:
        raise InputError(f"{file_path} is not a version {MODEL_VERSION} {MODEL_SCHEMA} document")
    try:
        variant = Variant.parse(doc["variant"])
        lower, upper = doc["theta_bounds"]
        params = KernelParams(doc["theta"], lower, upper)
        data = SampleSet.from_dict(doc["training"])
        nugget = float(doc["nugget"])
        beta0 = float(doc["beta0"])
        sigma2 = float(doc["sigma2"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"Malformed model document {file_path}: {e}")

    with_gradients = variant.uses_gradients
    R = assemble_R(data, params, with_gradients)
    if nugget > 0:
        R = R + np.diag(nugget * np.diag(R))
    try:
        L = cholesky(R, lower=True, check_finite=False)
    except LinAlgError:
        raise InfeasibleError(f"Stored model in {file_path} no longer factorizes")
    F = regression_vector(data.N, data.n, with_gradients)
    Rinv_F = cho_solve((L, True), F, check_finite=False)
    weights = cho_solve((L, True), data.response_vector(with_gradients) - beta0 * F, check_finite=False)
    logger.info(f"Loaded {variant.value} model from {file_path}")
    return TrainedSurrogate(variant, params, beta0, sigma2, L, weights, Rinv_F, float(F @ Rinv_F),
                            data, nugget, doc.get("tuning", {}))

