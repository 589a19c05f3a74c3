"""Seeded accuracy/timing sweeps over the analytic benchmarks or a CSV dataset."""
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .config import load_yaml
from .data_io import read_samples_csv, save_json_file, write_frame
from .errors import InputError, UndefinedResultError
from .function_factory import FunctionFactory
from .gek import SampleSet, Variant, train
from .sampling import DomainBox, from_unit, lhs, make_rng
from .sliced import SliceConfig
from .tuner import TunerConfig

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["variant", "N", "median_rmse", "q25", "q75", "median_train_s"]


def rmse(predictions, truth) -> float:
    """Relative mean squared error: sum (g - mu)^2 / sum (g - mean g)^2."""
    mu = np.asarray(predictions, dtype=float).ravel()
    g = np.asarray(truth, dtype=float).ravel()
    if mu.shape != g.shape:
        raise InputError(f"Prediction and truth lengths differ: {mu.size} vs {g.size}")
    if g.size < 2:
        raise InputError("RMSE needs at least two test points")
    spread = np.sum((g - g.mean()) ** 2)
    if spread == 0:
        raise UndefinedResultError("RMSE is undefined for a constant test response")
    return float(np.sum((g - mu) ** 2) / spread)


def box_stats(values) -> Dict[str, Any]:
    """Median, quartiles and 1.5 IQR outliers of the finite values."""
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    if v.size == 0:
        return {"median": float("nan"), "q25": float("nan"), "q75": float("nan"), "outliers": []}
    q25, median, q75 = np.percentile(v, [25, 50, 75])
    iqr = q75 - q25
    outliers = v[(v < q25 - 1.5 * iqr) | (v > q75 + 1.5 * iqr)]
    return {"median": float(median), "q25": float(q25), "q75": float(q75), "outliers": outliers.tolist()}


@dataclass
class ExperimentConfig:
    function: Optional[str] = None
    n: Optional[int] = None
    dataset: Optional[str] = None
    variants: List[str] = field(default_factory=lambda: [v.value for v in Variant])
    N: List[int] = field(default_factory=lambda: [20])
    m: Optional[int] = None
    appendant: int = 2
    starts: int = 10
    evaluation_factor: int = 200
    seed: int = 0
    repetitions: int = 10
    test_size: int = 3000
    timing: bool = True
    threads: int = 1
    output_dir: str = "output"
    progress: bool = False

    def __post_init__(self):
        if (self.function is None) == (self.dataset is None):
            raise InputError("Experiment config needs exactly one of 'function' or 'dataset'")
        if isinstance(self.N, int):
            self.N = [self.N]
        if isinstance(self.variants, str):
            self.variants = [self.variants]
        self.variants = [Variant.parse(v).value for v in self.variants]
        if not self.variants:
            raise InputError("Experiment config lists no variants")
        if not self.N or any(int(N) < 1 for N in self.N):
            raise InputError(f"Sample sizes must be positive integers: {self.N}")
        self.N = [int(N) for N in self.N]
        if self.repetitions < 1:
            raise InputError(f"repetitions must be positive, got {self.repetitions}")
        if self.test_size < 2:
            raise InputError(f"test_size must be at least 2, got {self.test_size}")
        if self.appendant not in (2, 3):
            raise InputError(f"appendant must be 2 or 3, got {self.appendant}")
        if self.threads < 1:
            raise InputError(f"threads must be positive, got {self.threads}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"Unknown experiment config key(s): {', '.join(unknown)}. "
                             f"Allowed: {', '.join(sorted(known))}")
        try:
            return cls(**data)
        except TypeError as e:
            raise InputError(f"Invalid experiment config: {e}")

    @classmethod
    def from_yaml(cls, config_path: str, defaults: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        """Keys missing from the file fall back to ``defaults`` (the benchmark section of config.yaml)."""
        return cls.from_dict({**(defaults or {}), **load_yaml(config_path)})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RunRecord:
    repetition: int
    train_seed: int
    test_seed: int
    variant: str
    N: int
    train_seconds: float
    rmse: float
    evaluations: int = 0
    status: str = "ok"
    message: str = ""


@dataclass
class ExperimentReport:
    config: Dict[str, Any]
    records: List[RunRecord]

    def cell(self, variant: str, N: int) -> List[RunRecord]:
        return [r for r in self.records if r.variant == variant and r.N == N]

    def summary(self) -> pd.DataFrame:
        rows = []
        for N in self.config["N"]:
            for variant in self.config["variants"]:
                cell = self.cell(variant, N)
                stats = box_stats([r.rmse for r in cell])
                times = [r.train_seconds for r in cell if r.status == "ok"]
                rows.append({
                    "variant": variant,
                    "N": N,
                    "median_rmse": stats["median"],
                    "q25": stats["q25"],
                    "q75": stats["q75"],
                    "median_train_s": float(np.median(times)) if times else float("nan"),
                })
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    def to_dict(self) -> Dict[str, Any]:
        stats = []
        for N in self.config["N"]:
            for variant in self.config["variants"]:
                cell = self.cell(variant, N)
                entry = {"variant": variant, "N": N, "failures": sum(r.status != "ok" for r in cell)}
                entry.update(box_stats([r.rmse for r in cell]))
                stats.append(entry)
        return {"config": self.config, "records": [asdict(r) for r in self.records], "stats": stats}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentReport":
        return cls(config=data["config"], records=[RunRecord(**r) for r in data["records"]])


def derive_seeds(master: int, repetition: int) -> Tuple[int, int]:
    train_seed = int(np.random.SeedSequence([master, repetition]).generate_state(1)[0])
    test_seed = int(np.random.SeedSequence([master, repetition, 1]).generate_state(1)[0])
    return train_seed, test_seed


class _Problem:
    """Training/test split source: an analytic function or a fixed dataset."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.function = None
        if config.function is not None:
            self.function = FunctionFactory.create_function(config.function, config.n)
            self.box = self.function.box
        else:
            needs_gradients = any(Variant.parse(v).uses_gradients for v in config.variants)
            self.X, self.y, self.G = read_samples_csv(config.dataset, require_gradients=needs_gradients)
            self.box = DomainBox(self.X.min(axis=0), self.X.max(axis=0))
            if len(self.X) <= max(config.N) + 1:
                raise InputError(f"Dataset has {len(self.X)} rows; need more than {max(config.N) + 1} "
                                 f"to leave a test set")

    def test_set(self, test_seed: int, train_seed: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.function is not None:
            X = from_unit(lhs(self.function.dimension, self.config.test_size, test_seed), self.box)
            return X, self.function.evaluate(X)[0]
        return self._dataset_split(train_seed, max(self.config.N))[1]

    def training_set(self, N: int, train_seed: int) -> SampleSet:
        if self.function is not None:
            X = from_unit(lhs(self.function.dimension, N, train_seed), self.box)
            y, G = self.function.evaluate(X)
            return SampleSet.from_physical(X, y, G, self.box)
        X, y, G = self._dataset_split(train_seed, N)[0]
        return SampleSet.from_physical(X, y, G, self.box)

    def _dataset_split(self, seed: int, N: int):
        order = make_rng(seed).permutation(len(self.X))
        train_idx, test_idx = order[:N], order[max(self.config.N):]
        G = None if self.G is None else self.G[train_idx]
        return (self.X[train_idx], self.y[train_idx], G), (self.X[test_idx], self.y[test_idx])


def _run_repetition(problem: _Problem, config: ExperimentConfig, repetition: int) -> List[RunRecord]:
    train_seed, test_seed = derive_seeds(config.seed, repetition)
    X_test, g_test = problem.test_set(test_seed, train_seed)
    slice_config = SliceConfig(m=config.m, appendant=config.appendant)
    records = []
    for N in config.N:
        data = problem.training_set(N, train_seed)
        for name in config.variants:
            variant = Variant.parse(name)
            tuner_config = TunerConfig(starts=config.starts, seed=train_seed,
                                       evaluation_factor=config.evaluation_factor, threads=1)
            started = time.perf_counter()
            try:
                model = train(data, variant, tuner_config, slice_config)
                seconds = time.perf_counter() - started
                mu, _ = model.predict_physical(X_test)
                records.append(RunRecord(repetition, train_seed, test_seed, variant.value, N,
                                         seconds if config.timing else 0.0, rmse(mu, g_test),
                                         model.outcome.evaluations))
            except Exception as e:
                logger.warning(f"Repetition {repetition}, {variant.value}, N={N} failed: {e}")
                records.append(RunRecord(repetition, train_seed, test_seed, variant.value, N,
                                         0.0, float("nan"), status="failed", message=str(e)))
    return records


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    problem = _Problem(config)
    source = config.function or config.dataset
    logger.info(f"Running {config.repetitions} repetitions on {source}: variants {config.variants}, N {config.N}")

    def run(repetition: int) -> List[RunRecord]:
        return _run_repetition(problem, config, repetition)

    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        per_rep = list(tqdm(executor.map(run, range(config.repetitions)), total=config.repetitions,
                            desc="Repetitions", disable=not config.progress))
    records = [record for rep in per_rep for record in rep]
    failures = sum(r.status != "ok" for r in records)
    if failures:
        logger.warning(f"{failures} of {len(records)} benchmark cells failed")
    return ExperimentReport(config=config.to_dict(), records=records)


def write_report(report: ExperimentReport, output_dir: str) -> Tuple[str, str]:
    report_path = os.path.join(output_dir, "report.json")
    summary_path = os.path.join(output_dir, "summary.csv")
    save_json_file(report.to_dict(), report_path)
    write_frame(report.summary(), summary_path)
    return report_path, summary_path
