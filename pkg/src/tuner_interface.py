from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np


@dataclass
class StartRecord:
    """Outcome of one Hooke & Jeeves start, kept for the tuning trace."""
    stage: str
    index: int
    start: np.ndarray
    argmin: np.ndarray
    value: float
    evaluations: int
    feasible: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "index": self.index,
            "start": np.asarray(self.start).tolist(),
            "argmin": np.asarray(self.argmin).tolist(),
            "value": float(self.value),
            "evaluations": int(self.evaluations),
            "feasible": bool(self.feasible),
        }


@dataclass
class TuningOutcome:
    theta: np.ndarray
    value: float
    evaluations: int
    method: str
    trace: List[StartRecord] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "theta": np.asarray(self.theta).tolist(),
            "objective": float(self.value),
            "evaluations": int(self.evaluations),
            "details": self.details,
        }


class HyperparameterTuner(ABC):
    """
    Abstract base class for correlation hyper-parameter tuning strategies.

    Every strategy minimizes a concentrated likelihood over theta (directly or
    through a reparameterization) and reports the exact number of objective
    evaluations it spent.
    """

    @abstractmethod
    def tune(self, data) -> TuningOutcome:
        """
        Choose theta for the given training data.

        :param data: SampleSet in unit-cube coordinates
        :return: TuningOutcome with the chosen theta, its objective value and the search trace
        :raises InfeasibleError: when no feasible theta was found
        """
        pass
