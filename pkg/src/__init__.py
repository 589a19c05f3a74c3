from .errors import SurrogateError, InputError, InfeasibleError, SlicingError, UndefinedResultError
from .kernels import KernelParams, corr_1d, corr_nd
from .sampling import DomainBox, lhs
from .sensitivity import SensitivityResult, estimate_indices
from .gek import SampleSet, TrainedSurrogate, Variant, full_log_likelihood, train, save_model, load_model
from .sliced import SliceConfig, SliceLayout, partition, sliced_log_likelihood, likelihood_gap, cost_ratio
from .tuner import TunerConfig, hooke_jeeves, multi_start, trend, tune_scheme1, tune_scheme2
from .tuner_interface import HyperparameterTuner, TuningOutcome
from .tuner_factory import TunerFactory
from .test_functions import TestFunction
from .function_factory import FunctionFactory
from .benchmarks import ExperimentConfig, ExperimentReport, rmse, run_experiment, write_report
from .log_config import setup_logging

__all__ = [
    'SurrogateError',
    'InputError',
    'InfeasibleError',
    'SlicingError',
    'UndefinedResultError',
    'KernelParams',
    'corr_1d',
    'corr_nd',
    'DomainBox',
    'lhs',
    'SensitivityResult',
    'estimate_indices',
    'SampleSet',
    'TrainedSurrogate',
    'Variant',
    'full_log_likelihood',
    'train',
    'save_model',
    'load_model',
    'SliceConfig',
    'SliceLayout',
    'partition',
    'sliced_log_likelihood',
    'likelihood_gap',
    'cost_ratio',
    'TunerConfig',
    'hooke_jeeves',
    'multi_start',
    'trend',
    'tune_scheme1',
    'tune_scheme2',
    'HyperparameterTuner',
    'TuningOutcome',
    'TunerFactory',
    'TestFunction',
    'FunctionFactory',
    'ExperimentConfig',
    'ExperimentReport',
    'rmse',
    'run_experiment',
    'write_report',
    'setup_logging',
]
