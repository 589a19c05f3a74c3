"""Hooke & Jeeves pattern search and the sensitivity-trend tuning schemes."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .data_io import write_frame
from .errors import InfeasibleError, InputError
from .gek import SampleSet
from .kernels import THETA_LOWER, THETA_UPPER, KernelParams
from .sampling import lhs
from .sensitivity import SensitivityResult
from .sliced import SliceLayout, sliced_log_likelihood
from .tuner_interface import StartRecord, TuningOutcome

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]

ALPHA_LOWER = np.array([0.001, 0.2, 0.001])
ALPHA_UPPER = np.array([5.0, 1.0, 5.0])


@dataclass
class TunerConfig:
    starts: int = 10
    seed: int = 0
    evaluation_factor: int = 200
    initial_step: float = 0.25
    shrink: float = 0.5
    stop_step: float = 1e-4
    theta_lower: float = THETA_LOWER
    theta_upper: float = THETA_UPPER
    threads: int = 1
    progress: bool = False

    def __post_init__(self):
        if self.starts < 1:
            raise InputError(f"starts must be positive, got {self.starts}")
        if self.evaluation_factor < 1:
            raise InputError(f"evaluation_factor must be positive, got {self.evaluation_factor}")
        if not 0 < self.shrink < 1:
            raise InputError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not 0 < self.stop_step <= self.initial_step:
            raise InputError("Step sizes must satisfy 0 < stop_step <= initial_step")
        if not 0 < self.theta_lower < self.theta_upper:
            raise InputError(f"Invalid theta bounds [{self.theta_lower}, {self.theta_upper}]")
        if self.threads < 1:
            raise InputError(f"threads must be positive, got {self.threads}")

    def theta_box(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        return np.full(n, self.theta_lower), np.full(n, self.theta_upper)


@dataclass
class SearchResult:
    argmin: np.ndarray
    value: float
    evaluations: int
    feasible: bool


class _BudgetExhausted(Exception):
    pass


class _CountingObjective:
    """Counts evaluations, remembers the best point and stops at the budget."""

    def __init__(self, objective: Objective, budget: int):
        self.objective = objective
        self.budget = budget
        self.evaluations = 0
        self.best_x: Optional[np.ndarray] = None
        self.best_value = np.inf

    def __call__(self, x: np.ndarray) -> float:
        if self.evaluations >= self.budget:
            raise _BudgetExhausted()
        self.evaluations += 1
        value = float(self.objective(x.copy()))
        if np.isnan(value):
            value = np.inf
        if self.best_x is None or value < self.best_value:
            self.best_x, self.best_value = x.copy(), value
        return value


def _explore(f: _CountingObjective, x: np.ndarray, fx: float, step: np.ndarray,
             lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, float]:
    x = x.copy()
    for k in range(x.size):
        for sign in (1.0, -1.0):
            trial = x.copy()
            trial[k] = np.clip(x[k] + sign * step[k], lower[k], upper[k])
            if trial[k] == x[k]:
                continue
            ft = f(trial)
            if ft < fx:
                x, fx = trial, ft
                break
    return x, fx


def hooke_jeeves(objective: Objective, start, lower, upper, config: TunerConfig,
                 budget: Optional[int] = None) -> SearchResult:
    """Bounded Hooke & Jeeves search; the returned value never exceeds objective(start)."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(start, dtype=float), lower, upper)
    width = upper - lower
    budget = budget or config.evaluation_factor * x.size
    f = _CountingObjective(objective, budget)

    h = config.initial_step
    try:
        fx = f(x)
        while h >= config.stop_step:
            x1, f1 = _explore(f, x, fx, h * width, lower, upper)
            if not f1 < fx:
                h *= config.shrink
                continue
            base, x, fx = x, x1, f1
            while True:
                pattern = np.clip(x + (x - base), lower, upper)
                x2, f2 = _explore(f, pattern, f(pattern), h * width, lower, upper)
                if not f2 < fx:
                    break
                base, x, fx = x, x2, f2
    except _BudgetExhausted:
        logger.debug(f"Hooke-Jeeves stopped at the budget of {budget} evaluations")

    feasible = bool(np.isfinite(f.best_value))
    return SearchResult(f.best_x, f.best_value, f.evaluations, feasible)


def multi_start(objective: Objective, lower, upper, config: TunerConfig,
                stage: str = "theta") -> Tuple[SearchResult, List[StartRecord]]:
    """Hooke & Jeeves from LHS starting points; lowest value wins, ties to the lower start index."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    starts = lower + lhs(lower.size, config.starts, config.seed) * (upper - lower)

    def run(x0: np.ndarray) -> SearchResult:
        return hooke_jeeves(objective, x0, lower, upper, config)

    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        results = list(tqdm(executor.map(run, starts), total=len(starts),
                            desc=f"Tuning {stage}", disable=not config.progress))

    trace = [StartRecord(stage, i, starts[i], r.argmin, r.value, r.evaluations, r.feasible)
             for i, r in enumerate(results)]
    best_index = min(range(len(results)), key=lambda i: (results[i].value, i))
    best = results[best_index]
    total = sum(r.evaluations for r in results)
    if not best.feasible:
        logger.error(f"All {len(results)} starts of the {stage} search were infeasible")
        raise InfeasibleError(f"No feasible point found by any of the {len(results)} {stage} starts")
    logger.info(f"Best {stage} start #{best_index}: value {best.value:.6g}, {total} evaluations in total")
    return SearchResult(best.argmin, best.value, total, True), trace


def grid_search(objective: Objective, grid) -> Tuple[np.ndarray, float]:
    """Exhaustive argmin over grid points (one per row, or scalars for a 1-D grid)."""
    points = np.asarray(grid, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    values = np.array([objective(p) for p in points])
    if not np.any(np.isfinite(values)):
        raise InfeasibleError("Objective is infeasible on the whole grid")
    best = int(np.argmin(values))
    return points[best], float(values[best])


@dataclass
class TrendParams:
    alpha1: float
    alpha2: float
    alpha3: float

    def __post_init__(self):
        vec = self.as_vector()
        if np.any(vec < ALPHA_LOWER) or np.any(vec > ALPHA_UPPER):
            raise InputError(f"Trend parameters {vec.tolist()} outside their box")

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.alpha3], dtype=float)

    @classmethod
    def from_vector(cls, vec) -> "TrendParams":
        a1, a2, a3 = np.asarray(vec, dtype=float)
        return cls(float(a1), float(a2), float(a3))


def trend(alpha, s_hat, lower: float = THETA_LOWER, upper: float = THETA_UPPER) -> np.ndarray:
    """theta_k = alpha1 * s_k ** alpha2 + alpha3, clipped into the theta bounds."""
    a1, a2, a3 = alpha.as_vector() if isinstance(alpha, TrendParams) else np.asarray(alpha, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    return np.clip(a1 * s_hat ** a2 + a3, lower, upper)


def _sliced_objective(data: SampleSet, layout: SliceLayout, config: TunerConfig, appendant: int) -> Objective:
    def objective(theta: np.ndarray) -> float:
        params = KernelParams(theta, config.theta_lower, config.theta_upper)
        return sliced_log_likelihood(params, data, layout, appendant)
    return objective


def _tune_trend(data: SampleSet, layout: SliceLayout, sens: SensitivityResult, config: TunerConfig,
                appendant: int) -> Tuple[SearchResult, List[StartRecord]]:
    theta_objective = _sliced_objective(data, layout, config, appendant)

    def alpha_objective(alpha: np.ndarray) -> float:
        return theta_objective(trend(alpha, sens.s_hat, config.theta_lower, config.theta_upper))

    return multi_start(alpha_objective, ALPHA_LOWER, ALPHA_UPPER, config, stage="alpha")


def tune_scheme2(data: SampleSet, layout: SliceLayout, sens: SensitivityResult, config: TunerConfig,
                 appendant: int = 2) -> TuningOutcome:
    """Search the three trend parameters only and return trend(alpha)."""
    result, trace = _tune_trend(data, layout, sens, config, appendant)
    theta = trend(result.argmin, sens.s_hat, config.theta_lower, config.theta_upper)
    return TuningOutcome(theta=theta, value=result.value, evaluations=result.evaluations,
                         method="sliced-scheme2", trace=trace,
                         details={"alpha": result.argmin.tolist(), "layout": layout.summary(),
                                  "appendant": appendant})


def tune_scheme1(data: SampleSet, layout: SliceLayout, sens: SensitivityResult, config: TunerConfig,
                 appendant: int = 2) -> TuningOutcome:
    """Trend search first, then a single Hooke & Jeeves run over the full theta from trend(alpha)."""
    stage1, trace = _tune_trend(data, layout, sens, config, appendant)
    theta1 = trend(stage1.argmin, sens.s_hat, config.theta_lower, config.theta_upper)
    lower, upper = config.theta_box(data.n)
    stage2 = hooke_jeeves(_sliced_objective(data, layout, config, appendant), theta1, lower, upper, config)
    trace.append(StartRecord("theta", 0, theta1, stage2.argmin, stage2.value, stage2.evaluations, stage2.feasible))
    evaluations = stage1.evaluations + stage2.evaluations

    if stage2.feasible:
        theta, value = stage2.argmin, stage2.value
    else:
        logger.warning("Second tuning stage infeasible; keeping the trend estimate")
        theta, value = theta1, stage1.value
    return TuningOutcome(theta=theta, value=value, evaluations=evaluations, method="sliced-scheme1",
                         trace=trace,
                         details={"alpha": stage1.argmin.tolist(), "trend_theta": theta1.tolist(),
                                  "trend_objective": float(stage1.value),
                                  "layout": layout.summary(), "appendant": appendant})


def write_trace_csv(outcome: TuningOutcome, file_path: str) -> None:
    rows = []
    for record in outcome.trace:
        row = record.to_dict()
        row["start"] = " ".join(f"{v:.17g}" for v in row["start"])
        row["argmin"] = " ".join(f"{v:.17g}" for v in row["argmin"])
        rows.append(row)
    columns = ["stage", "index", "start", "argmin", "value", "evaluations", "feasible"]
    write_frame(pd.DataFrame(rows, columns=columns), file_path)
