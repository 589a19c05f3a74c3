import os
import re
import json
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import InputError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def load_json_file(file_path: str) -> Dict[str, Any]:
    """Load a JSON file."""
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        logger.error(f"File not found: {file_path}")
        raise InputError(f"File not found: {file_path}")
    except json.JSONDecodeError as e:
        logger.error(f"Error parsing JSON file {file_path}: {e}", exc_info=True)
        raise InputError(f"Malformed JSON in {file_path}: {e}")


def save_json_file(data: Any, file_path: str) -> None:
    """Save data to a JSON file."""
    try:
        _ensure_parent(file_path)
        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
        logger.info(f"Data saved to {file_path}")
    except OSError as e:
        logger.error(f"Error saving data to {file_path}: {e}", exc_info=True)
        raise InputError(f"Cannot write {file_path}: {e}")


def _ensure_parent(file_path: str) -> None:
    parent = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(parent, exist_ok=True)


def write_frame(frame: pd.DataFrame, file_path: str) -> None:
    try:
        _ensure_parent(file_path)
        frame.to_csv(file_path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"Wrote {len(frame)} rows to {file_path}")
    except OSError as e:
        logger.error(f"Error writing CSV {file_path}: {e}", exc_info=True)
        raise InputError(f"Cannot write {file_path}: {e}")


def _read_frame(file_path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(file_path, dtype=str, skipinitialspace=True)
    except FileNotFoundError:
        logger.error(f"CSV file not found: {file_path}")
        raise InputError(f"File not found: {file_path}")
    except pd.errors.EmptyDataError:
        raise InputError(f"{file_path} is empty; a header row is mandatory")
    except pd.errors.ParserError as e:
        raise InputError(f"Malformed CSV {file_path}: {e}")


def _indexed_columns(columns: List[str], prefix: str) -> List[str]:
    pattern = re.compile(rf"^{prefix}_(\d+)$")
    found = {int(m.group(1)): c for c in columns if (m := pattern.match(c.strip()))}
    if not found:
        return []
    n = max(found)
    missing = [k for k in range(1, n + 1) if k not in found]
    if missing:
        raise InputError(f"Missing column(s) {', '.join(f'{prefix}_{k}' for k in missing)}")
    return [found[k] for k in range(1, n + 1)]


def _numeric(frame: pd.DataFrame, columns: List[str], file_path: str) -> np.ndarray:
    if not columns:
        return np.empty((len(frame), 0))
    values = frame[columns].apply(pd.to_numeric, errors='coerce')
    bad = ~np.isfinite(values.to_numpy(dtype=float))
    if bad.any():
        problems = []
        for row, col in zip(*np.nonzero(bad)):
            # header is line 1
            problems.append(f"line {row + 2}, column '{columns[col]}': {frame.iloc[row][columns[col]]!r}")
        shown = "; ".join(problems[:10])
        more = f" (and {len(problems) - 10} more)" if len(problems) > 10 else ""
        raise InputError(f"Non-numeric or non-finite values in {file_path}: {shown}{more}")
    return values.to_numpy(dtype=float)


def sample_columns(n: int, with_response: bool = True, with_gradients: bool = True) -> List[str]:
    columns = [f"x_{k}" for k in range(1, n + 1)]
    if with_response:
        columns.append("y")
    if with_gradients:
        columns += [f"dy_{k}" for k in range(1, n + 1)]
    return columns


def write_samples_csv(file_path: str, X: np.ndarray, y: Optional[np.ndarray] = None,
                      G: Optional[np.ndarray] = None) -> None:
    """One row per site: x_1..x_n, then y and dy_1..dy_n when available."""
    X = np.atleast_2d(X)
    n = X.shape[1]
    data = {f"x_{k + 1}": X[:, k] for k in range(n)}
    if y is not None:
        data["y"] = np.asarray(y, dtype=float)
    if G is not None:
        for k in range(n):
            data[f"dy_{k + 1}"] = G[:, k]
    frame = pd.DataFrame(data, columns=sample_columns(n, y is not None, G is not None))
    write_frame(frame, file_path)


def read_samples_csv(file_path: str, require_gradients: bool = False) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Read a sample CSV and return (X, y, G) in physical units; G is None when absent."""
    frame = _read_frame(file_path)
    frame.columns = [c.strip() for c in frame.columns]
    x_cols = _indexed_columns(list(frame.columns), "x")
    if not x_cols:
        raise InputError(f"{file_path} has no x_1..x_n columns")
    if "y" not in frame.columns:
        raise InputError(f"{file_path} has no 'y' column")
    dy_cols = _indexed_columns(list(frame.columns), "dy")
    n = len(x_cols)
    if dy_cols and len(dy_cols) != n:
        raise InputError(f"{file_path} has {len(dy_cols)} gradient columns for {n} inputs")
    if require_gradients and not dy_cols:
        raise InputError(f"{file_path} has no gradient columns dy_1..dy_{n}; gradient-enhanced variants need them")
    if len(frame) == 0:
        raise InputError(f"{file_path} contains no samples")
    X = _numeric(frame, x_cols, file_path)
    y = _numeric(frame, ["y"], file_path)[:, 0]
    G = _numeric(frame, dy_cols, file_path) if dy_cols else None
    logger.info(f"Read {len(X)} samples of dimension {n} from {file_path}")
    return X, y, G


def read_points_csv(file_path: str, n: int) -> np.ndarray:
    frame = _read_frame(file_path)
    frame.columns = [c.strip() for c in frame.columns]
    x_cols = _indexed_columns(list(frame.columns), "x")
    if len(x_cols) != n:
        raise InputError(f"{file_path} has {len(x_cols)} input columns, model expects {n}")
    return _numeric(frame, x_cols, file_path)


def write_predictions_csv(file_path: str, X: np.ndarray, mu: np.ndarray, s2: np.ndarray) -> None:
    n = X.shape[1]
    data = {f"x_{k + 1}": X[:, k] for k in range(n)}
    data["mu"] = mu
    data["s2"] = s2
    write_frame(pd.DataFrame(data, columns=[f"x_{k}" for k in range(1, n + 1)] + ["mu", "s2"]), file_path)
