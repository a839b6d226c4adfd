"""
Financial variables derived from daily market bars.

    R(t)   = log P(t) - log P(t-1)                 daily log-return
    ER(t)  = R(t) - R_index(t)                     excess log-return over the index
    VOL(t) = 2 (P_high - P_low) / (P_high + P_low) range-based volatility proxy
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from ingest import MarketBar
from utils import DegenerateDataError, InsufficientDataError, ValidationError

logger = logging.getLogger(__name__)

FINANCE_COLUMNS = ['date', 'er', 'vol']


@dataclass(frozen=True)
class FinancialSeries:
    """Excess log-returns and volatility proxy for one symbol."""

    dates: pd.DatetimeIndex
    er: pd.Series
    vol: pd.Series

    def to_frame(self) -> pd.DataFrame:
        """Rows for every bar date; er is empty on dates without a return."""
        frame = pd.DataFrame({'er': self.er, 'vol': self.vol}).reindex(self.dates)
        frame.index.name = 'date'
        return frame.reset_index()


def _bar_index(bars: Sequence[MarketBar]) -> pd.DatetimeIndex:
    return pd.DatetimeIndex([pd.Timestamp(b.date) for b in bars], name='date')


def log_returns(bars: Sequence[MarketBar]) -> pd.Series:
    """
    Daily log-returns of the closing price, dated at the later day.

    Raises:
        InsufficientDataError: Fewer than 2 bars
        ValidationError: Non-positive close
    """
    if len(bars) < 2:
        raise InsufficientDataError(f"log-returns need at least 2 bars, got {len(bars)}")

    closes = np.array([b.close for b in bars], dtype=float)
    if np.any(closes <= 0):
        raise ValidationError("closing prices must be positive")

    logs = np.log(closes)
    return pd.Series(logs[1:] - logs[:-1], index=_bar_index(bars)[1:], name='R')


def excess_returns(stock_returns: pd.Series, index_returns: pd.Series) -> pd.Series:
    """
    Pointwise stock minus index return on the dates both series share.

    Missing days are dropped, never interpolated.

    Raises:
        DegenerateDataError: No common dates
    """
    stock, index = stock_returns.align(index_returns, join='inner')
    if stock.empty:
        raise DegenerateDataError("stock and index returns share no dates")
    return pd.Series(stock.to_numpy() - index.to_numpy(), index=stock.index, name='ER')


def volatility_proxy(bars: Sequence[MarketBar]) -> pd.Series:
    """
    Normalized daily range 2 (high - low) / (high + low).

    Raises:
        ValidationError: Non-positive prices or high below low
    """
    high = np.array([b.high for b in bars], dtype=float)
    low = np.array([b.low for b in bars], dtype=float)
    if np.any(low <= 0) or np.any(high <= 0):
        raise ValidationError("high and low prices must be positive")
    if np.any(high < low):
        raise ValidationError("high must not be below low")
    return pd.Series(2.0 * (high - low) / (high + low), index=_bar_index(bars), name='VOL')


def compute_financial_series(stock_bars: Sequence[MarketBar], index_bars: Sequence[MarketBar]) -> FinancialSeries:
    """ER against the index and VOL for one symbol."""
    er = excess_returns(log_returns(stock_bars), log_returns(index_bars))
    vol = volatility_proxy(stock_bars)
    return FinancialSeries(dates=_bar_index(stock_bars), er=er, vol=vol)
