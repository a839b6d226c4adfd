"""
Alignment of dated series, standardization and lagged design matrices.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from utils import DegenerateDataError, InsufficientDataError, ModelSpecificationError

logger = logging.getLogger(__name__)

INTERCEPT = 'intercept'


def lag_name(name: str, lag: int) -> str:
    """Regressor name for a lagged column, e.g. ER(t-1)."""
    return f'{name}(t-{lag})'


@dataclass(frozen=True, eq=False)
class AlignedFrame:
    """Named columns of equal length over strictly increasing common dates."""

    data: pd.DataFrame

    def __post_init__(self):
        if not self.data.index.is_monotonic_increasing or not self.data.index.is_unique:
            raise ValueError("frame dates must be strictly increasing")

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.data.index

    @property
    def names(self) -> List[str]:
        return list(self.data.columns)

    def __len__(self) -> int:
        return len(self.data)

    def column(self, name: str) -> np.ndarray:
        if name not in self.data.columns:
            raise ModelSpecificationError(f"unknown column {name!r}; frame has {', '.join(self.names)}")
        return self.data[name].to_numpy(dtype=float, copy=True)

    def select(self, names: Sequence[str]) -> 'AlignedFrame':
        for name in names:
            if name not in self.data.columns:
                raise ModelSpecificationError(f"unknown column {name!r}; frame has {', '.join(self.names)}")
        return AlignedFrame(self.data[list(names)].copy())

    def standardized(self) -> 'AlignedFrame':
        """Every column standardized with its in-sample moments."""
        columns = {}
        for name in self.names:
            try:
                columns[name] = standardize(self.column(name))
            except DegenerateDataError as e:
                raise DegenerateDataError(f"column {name}: {e}") from None
        return AlignedFrame(pd.DataFrame(columns, index=self.dates))

    def to_csv(self) -> str:
        return self.data.to_csv(float_format='%.17g', date_format='%Y-%m-%d', lineterminator='\n')


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Response vector and named regressor columns (intercept first)."""

    response: np.ndarray
    matrix: np.ndarray
    names: Tuple[str, ...]
    response_name: str
    dates: pd.DatetimeIndex
    lag_spec: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    @property
    def regressors(self) -> Dict[str, np.ndarray]:
        return {name: self.matrix[:, i] for i, name in enumerate(self.names)}

    @property
    def n_obs(self) -> int:
        return len(self.response)

    def rows(self, stop: int) -> 'DesignMatrix':
        """The first stop rows, used for expanding-window refits."""
        return DesignMatrix(
            response=self.response[:stop],
            matrix=self.matrix[:stop],
            names=self.names,
            response_name=self.response_name,
            dates=self.dates[:stop],
            lag_spec=self.lag_spec,
        )


def align(series: Sequence[pd.Series]) -> AlignedFrame:
    """
    Inner-join named dated series on their dates.

    Rows with a missing value in any column are dropped and column order follows
    the input order.

    Raises:
        DegenerateDataError: No series, or no date shared by all of them
    """
    if not series:
        raise DegenerateDataError("nothing to align")

    names = [s.name for s in series]
    if len(set(names)) != len(names):
        raise ModelSpecificationError(f"series names must be unique, got {names}")
    for s in series:
        if not s.index.is_unique:
            raise DegenerateDataError(f"series {s.name} has repeated dates")

    data = pd.concat(list(series), axis=1, join='inner').dropna().sort_index()
    if data.empty:
        raise DegenerateDataError(f"series {', '.join(map(str, names))} share no dates")
    data.index.name = 'date'
    return AlignedFrame(data)


def standardize(column: np.ndarray) -> np.ndarray:
    """
    Zero mean, unit sample standard deviation (n - 1 denominator).

    Raises:
        InsufficientDataError: Fewer than 2 values
        DegenerateDataError: Zero variance
    """
    values = np.asarray(column, dtype=float)
    if len(values) < 2:
        raise InsufficientDataError("standardization needs at least 2 values")

    mean = values.mean()
    centered = values - mean
    sd = np.sqrt(np.dot(centered, centered) / (len(values) - 1))
    scale = np.max(np.abs(values))
    if not np.isfinite(sd) or sd <= 8 * np.finfo(float).eps * scale:
        raise DegenerateDataError("column has zero variance")
    return centered / sd


def lagged_design(frame: AlignedFrame, response: str, lag_spec: Mapping[str, Sequence[int]]) -> DesignMatrix:
    """
    Build the design for response(t) on lagged columns plus an intercept.

    Rows start at the largest requested lag so that every lag exists; row t of a
    lag-tau regressor holds the source value at t - tau.

    Args:
        frame: Aligned columns
        response: Column regressed on the lags
        lag_spec: Source column -> lags (each >= 1), in regressor order

    Raises:
        ModelSpecificationError: Unknown column or a lag below 1
        InsufficientDataError: A lag at or beyond the frame length, or no
            more rows than regressors
        DegenerateDataError: A lagged regressor is constant on the sample
    """
    n = len(frame)
    target = frame.column(response)
    all_lags = [lag for lags in lag_spec.values() for lag in lags]
    if any(lag < 1 for lag in all_lags):
        raise ModelSpecificationError(f"lags must be at least 1, got {sorted(all_lags)}")
    max_lag = max(all_lags, default=0)
    if max_lag >= n:
        raise InsufficientDataError(f"lag {max_lag} needs more than {n} rows")

    names = [INTERCEPT]
    columns = [np.ones(n - max_lag)]
    for source, lags in lag_spec.items():
        values = frame.column(source)
        for lag in lags:
            lagged = values[max_lag - lag:n - lag]
            name = lag_name(source, lag)
            if np.all(lagged == lagged[0]):
                raise DegenerateDataError(f"regressor {name} is constant on the estimation sample")
            names.append(name)
            columns.append(lagged)

    rows = n - max_lag
    if rows <= len(names):
        raise InsufficientDataError(f"{rows} rows cannot estimate {len(names)} coefficients")

    return DesignMatrix(
        response=target[max_lag:],
        matrix=np.column_stack(columns),
        names=tuple(names),
        response_name=response,
        dates=frame.dates[max_lag:],
        lag_spec={source: tuple(lags) for source, lags in lag_spec.items()},
    )
