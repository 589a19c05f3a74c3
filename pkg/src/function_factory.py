import logging
from typing import Optional

import numpy as np

from .errors import InputError
from .sampling import DomainBox
from .test_functions import TestFunction, camelback, dixon_price, oscillator_1d, rosenbrock_weighted

logger = logging.getLogger(__name__)

FUNCTION_NAMES = ("oscillator1d", "camelback", "rosenbrock", "dixon-price")


class FunctionFactory:
    @staticmethod
    def create_function(name: str, dimension: Optional[int] = None) -> TestFunction:
        key = str(name).strip().lower()
        logger.debug(f"Creating test function: {key} (n={dimension})")
        if key == "oscillator1d":
            _check_fixed(key, dimension, 1)
            return TestFunction(key, 1, DomainBox([0.0], [6.0]), oscillator_1d)
        if key == "camelback":
            _check_fixed(key, dimension, 2)
            return TestFunction(key, 2, DomainBox([-2.0, -1.0], [2.0, 1.0]), camelback)
        if key == "rosenbrock":
            n = _check_variable(key, dimension)
            return TestFunction(key, n, DomainBox(-np.ones(n), np.ones(n)), rosenbrock_weighted)
        if key == "dixon-price":
            n = _check_variable(key, dimension)
            return TestFunction(key, n, DomainBox(np.zeros(n), np.ones(n)), dixon_price)
        logger.error(f"Unsupported test function: {name}")
        raise InputError(f"Unknown test function '{name}'. Available: {', '.join(FUNCTION_NAMES)}")


def _check_fixed(name: str, dimension: Optional[int], fixed: int) -> None:
    if dimension is not None and dimension != fixed:
        raise InputError(f"{name} is {fixed}-dimensional, got n={dimension}")


def _check_variable(name: str, dimension: Optional[int]) -> int:
    if dimension is None or dimension < 2:
        raise InputError(f"{name} needs a dimension n >= 2, got {dimension}")
    return int(dimension)
