import numpy as np
import pytest

from src.function_factory import FunctionFactory
from src.gek import SampleSet
from src.sampling import from_unit, lhs
from src.tuner import TunerConfig


def make_samples(name: str, N: int, seed: int, n=None) -> SampleSet:
    fn = FunctionFactory.create_function(name, n)
    X = from_unit(lhs(fn.dimension, N, seed), fn.box)
    y, G = fn.evaluate(X)
    return SampleSet.from_physical(X, y, G, fn.box)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def camelback_data():
    return make_samples("camelback", 12, seed=3)


@pytest.fixture
def oscillator_data():
    return make_samples("oscillator1d", 10, seed=1)


@pytest.fixture
def fast_tuner():
    return TunerConfig(starts=3, seed=0, evaluation_factor=60)


@pytest.fixture
def sample_factory():
    return make_samples
