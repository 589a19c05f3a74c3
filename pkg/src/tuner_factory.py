import logging
from typing import Optional

import numpy as np

from .gek import SampleSet, Variant, full_log_likelihood
from .kernels import KernelParams
from .sensitivity import estimate_indices
from .sliced import SliceConfig, make_layout
from .tuner import TunerConfig, multi_start, tune_scheme1, tune_scheme2
from .tuner_interface import HyperparameterTuner, TuningOutcome

logger = logging.getLogger(__name__)


class FullLikelihoodTuner(HyperparameterTuner):
    """Multi-start search over theta on the full concentrated likelihood (Kriging and GEK)."""

    def __init__(self, config: TunerConfig, with_gradients: bool):
        self.config = config
        self.with_gradients = with_gradients

    def tune(self, data: SampleSet) -> TuningOutcome:
        config = self.config

        def objective(theta: np.ndarray) -> float:
            params = KernelParams(theta, config.theta_lower, config.theta_upper)
            return full_log_likelihood(params, data, self.with_gradients)

        lower, upper = config.theta_box(data.n)
        result, trace = multi_start(objective, lower, upper, config)
        return TuningOutcome(theta=result.argmin, value=result.value, evaluations=result.evaluations,
                             method="full", trace=trace)


class SlicedTuner(HyperparameterTuner):
    """Sensitivity-trend tuning on the sliced likelihood."""

    def __init__(self, config: TunerConfig, slice_config: SliceConfig, scheme: int):
        self.config = config
        self.slice_config = slice_config
        self.scheme = scheme

    def tune(self, data: SampleSet) -> TuningOutcome:
        sens = estimate_indices(data.G)
        layout = make_layout(data, sens, self.slice_config)
        logger.info(f"Slicing along x_{layout.dim + 1} into {layout.m} slices "
                    f"({self.slice_config.appendant}-appendant, scheme {self.scheme})")
        tune = tune_scheme1 if self.scheme == 1 else tune_scheme2
        outcome = tune(data, layout, sens, self.config, self.slice_config.appendant)
        outcome.details["sensitivity"] = sens.to_dict()
        return outcome


class TunerFactory:
    @staticmethod
    def create_tuner(variant: Variant, config: TunerConfig,
                     slice_config: Optional[SliceConfig] = None) -> HyperparameterTuner:
        logger.debug(f"Creating tuner for variant: {variant}")
        if variant is Variant.KRIGING:
            return FullLikelihoodTuner(config, with_gradients=False)
        if variant is Variant.GEK:
            return FullLikelihoodTuner(config, with_gradients=True)
        if variant is Variant.SGEK1:
            return SlicedTuner(config, slice_config or SliceConfig(), scheme=1)
        if variant is Variant.SGEK2:
            return SlicedTuner(config, slice_config or SliceConfig(), scheme=2)
        logger.error(f"Unsupported variant: {variant}")
        raise ValueError(f"Unsupported variant: {variant}")
