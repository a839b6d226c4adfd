"""
Market-only (M0) versus sentiment-augmented (M1) regressions.

    ER:   M0  ER(t)  ~ ER(t-1) + ER(t-2)
          M1  ER(t)  ~ ER(t-1) + ER(t-2) + SR(t-1) + G(t-1) + B(t-1)
    VOL:  M0  VOL(t) ~ VOL(t-1) + VOL(t-2)
          M1  VOL(t) ~ VOL(t-1) + VOL(t-2) + G(t-1) + B(t-1) [+ V(t-1), twitter only]

SA is never a regressor: it is G - B. Both models of a comparison share the
same response rows because the financial variable's second lag sets the
truncation for both.

Two modes:
    in-sample      compare residual standard errors of the full-sample fits
    walk-forward   refit on an expanding window and compare the root mean
                   squared one-step-ahead forecast errors
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from statcore import OlsFit, least_squares, ols_fit, significance_code
from timeseries import INTERCEPT, AlignedFrame, DesignMatrix, lagged_design
from utils import (
    InsufficientDataError,
    ModelSpecificationError,
    fan_out,
    format_float,
    format_percent,
    format_table,
)

logger = logging.getLogger(__name__)

IN_SAMPLE = 'in-sample'
WALK_FORWARD = 'walk-forward'
MODES = (IN_SAMPLE, WALK_FORWARD)

RETURN_M0 = {'ER': (1, 2)}
RETURN_M1 = {'ER': (1, 2), 'SR': (1,), 'G': (1,), 'B': (1,)}
VOLATILITY_M0 = {'VOL': (1, 2)}
VOLATILITY_M1 = {'VOL': (1, 2), 'G': (1,), 'B': (1,)}

COMPARISON_COLUMNS = [
    'source', 'company', 'target', 'mode', 'n_obs',
    'rse_m0', 'rse_m1', 'r2_m0', 'r2_m1', 'rmse_m0', 'rmse_m1', 'improvement_pct',
]
COEFFICIENT_COLUMNS = [
    'source', 'company', 'target', 'model', 'regressor', 'estimate', 'std_error', 't_stat', 'p_value', 'code',
]

SIGNIFICANCE_LEGEND = "Significance codes: p-value < 0.01: ***, p-value < 0.05: **, p-value < 0.1: *\n"

# Column groups of the report tables, in display order
SOURCE_ORDER = ('news', 'twitter')


@dataclass(frozen=True, eq=False)
class ModelComparison:
    """M0 and M1 fitted for one (company, source, target)."""

    company: str
    source: str
    target: str
    m0: OlsFit
    m1: OlsFit
    mode: str = IN_SAMPLE
    m0_forecast_rmse: Optional[float] = None
    m1_forecast_rmse: Optional[float] = None

    def __post_init__(self):
        if not set(self.m0.names) < set(self.m1.names):
            raise ModelSpecificationError("M0 regressors must be a strict subset of M1 regressors")
        if not self.m0.dates.equals(self.m1.dates):
            raise ModelSpecificationError("M0 and M1 must be fitted on the same rows")

    @property
    def rse_improvement_pct(self) -> float:
        """
        100 (e0 - e1) / e0, where e is the residual standard error in-sample
        and the forecast RMSE in walk-forward mode. Negative when M1 does worse.
        """
        if self.mode == WALK_FORWARD:
            before, after = self.m0_forecast_rmse, self.m1_forecast_rmse
        else:
            before, after = self.m0.rse, self.m1.rse
        if before == 0:
            return math.nan
        return 100.0 * (before - after) / before


def default_min_train(design: DesignMatrix) -> int:
    """Smallest expanding window: half the sample, and never fewer than p + 2 rows."""
    return max(len(design.names) + 2, design.n_obs // 2)


def walk_forward_rmse(design: DesignMatrix, min_train: int) -> float:
    """
    Root mean squared one-step-ahead forecast error.

    For every row t >= min_train the model is refitted on rows [0, t) and used
    to forecast row t.

    Raises:
        InsufficientDataError: No row left to forecast, or a window too short to fit
        RankDeficiencyError: A training window with dependent columns
    """
    if min_train >= design.n_obs:
        raise InsufficientDataError(f"min_train {min_train} leaves no rows to forecast out of {design.n_obs}")

    errors = []
    for t in range(min_train, design.n_obs):
        coefficients = least_squares(design.matrix[:t], design.response[:t], design.names)
        errors.append(design.response[t] - float(design.matrix[t] @ coefficients))
    return math.sqrt(float(np.mean(np.square(errors))))


def _compare(
    frame: AlignedFrame,
    target: str,
    m0_spec: Mapping[str, Tuple[int, ...]],
    m1_spec: Mapping[str, Tuple[int, ...]],
    company: str,
    source: str,
    mode: str,
    min_train: Optional[int],
) -> ModelComparison:
    if mode not in MODES:
        raise ModelSpecificationError(f"mode must be one of {', '.join(MODES)}, got {mode!r}")

    data = frame.select(list(m1_spec)).standardized()
    d0 = lagged_design(data, target, m0_spec)
    d1 = lagged_design(data, target, m1_spec)
    m0 = ols_fit(d0)
    m1 = ols_fit(d1)

    rmse0 = rmse1 = None
    if mode == WALK_FORWARD:
        window = min_train if min_train is not None else default_min_train(d1)
        rmse0 = walk_forward_rmse(d0, window)
        rmse1 = walk_forward_rmse(d1, window)

    comparison = ModelComparison(
        company=company,
        source=source,
        target=target,
        m0=m0,
        m1=m1,
        mode=mode,
        m0_forecast_rmse=rmse0,
        m1_forecast_rmse=rmse1,
    )
    logger.debug(
        f"{source} {company} {target}: rse {m0.rse:.6g} -> {m1.rse:.6g} "
        f"({comparison.rse_improvement_pct:.2f}%, {mode})"
    )
    return comparison


def fit_return_models(
    frame: AlignedFrame,
    company: str = '',
    source: str = '',
    mode: str = IN_SAMPLE,
    min_train: Optional[int] = None,
) -> ModelComparison:
    """
    Fit M0 and M1 for the excess return.

    The ER, SR, G and B columns are standardized on the frame's sample before
    fitting.

    Args:
        frame: Aligned frame holding ER, SR, G and B
        company, source: Recorded on the comparison
        mode: in-sample or walk-forward
        min_train: First forecast row in walk-forward mode (defaults to default_min_train)

    Raises:
        ModelSpecificationError: Missing column or unknown mode
        RankDeficiencyError: Dependent regressors
        DegenerateDataError: A constant column
    """
    return _compare(frame, 'ER', RETURN_M0, RETURN_M1, company, source, mode, min_train)


def fit_volatility_models(
    frame: AlignedFrame,
    include_volume: bool = False,
    company: str = '',
    source: str = '',
    mode: str = IN_SAMPLE,
    min_train: Optional[int] = None,
) -> ModelComparison:
    """
    Fit M0 and M1 for the volatility proxy.

    M1 adds V(t-1) only when include_volume is set, which is the twitter model;
    the news model never uses the story volume.

    Raises:
        ModelSpecificationError: include_volume without a V column, include_volume
            for the news source, missing column or unknown mode
    """
    m1_spec = dict(VOLATILITY_M1)
    if include_volume:
        if source == 'news':
            raise ModelSpecificationError("the news volatility model does not use the story volume V")
        if 'V' not in frame.names:
            raise ModelSpecificationError("include_volume requires a V column")
        m1_spec['V'] = (1,)
    return _compare(frame, 'VOL', VOLATILITY_M0, m1_spec, company, source, mode, min_train)


def compare_models(
    frames: Mapping[str, AlignedFrame],
    source: str,
    mode: str = IN_SAMPLE,
    workers: int = 1,
) -> List[ModelComparison]:
    """
    ER and VOL comparisons for every company of one source, in company order.

    Twitter volatility models include the message volume; news models do not.
    """
    include_volume = source == 'twitter'

    def fit_company(item: Tuple[str, AlignedFrame]) -> List[ModelComparison]:
        company, frame = item
        return [
            fit_return_models(frame, company=company, source=source, mode=mode),
            fit_volatility_models(frame, include_volume, company=company, source=source, mode=mode),
        ]

    per_company = fan_out(fit_company, list(frames.items()), workers)
    comparisons = [c for company_comparisons in per_company for c in company_comparisons]
    logger.info(f"Fitted {len(comparisons)} model comparisons ({source}, {mode})")
    return comparisons


# =============================================================================
# Reporting
# =============================================================================

def _ordered(values: Iterable[str]) -> List[str]:
    seen: List[str] = []
    for value in values:
        if value not in seen:
            seen.append(value)
    return seen


def _source_rank(source: str) -> int:
    return SOURCE_ORDER.index(source) if source in SOURCE_ORDER else len(SOURCE_ORDER)


def improvement_table(comparisons: Sequence[ModelComparison]) -> str:
    """Companies by source, improvements to 2 decimals ("8.34", "-2.41")."""
    sources = sorted(_ordered(c.source for c in comparisons) or list(SOURCE_ORDER), key=_source_rank)
    companies = _ordered(c.company for c in comparisons)
    cells = {(c.company, c.source): format_percent(c.rse_improvement_pct) for c in comparisons}

    headers = ['Company'] + [s.upper() for s in sources]
    rows = [[company] + [cells.get((company, s), '-') for s in sources] for company in companies]
    return format_table(headers, rows)


def coefficient_table(comparisons: Sequence[ModelComparison], target: str) -> str:
    """
    M1 coefficients of target with significance codes.

    Rows are the M1 regressors without the intercept; columns are grouped by
    source and then company. Cells read like "1.192513e-01*"; "-" marks a
    regressor absent from that model (V in the news volatility model).
    """
    selected = [c for c in comparisons if c.target == target]
    regressors = _ordered(name for c in selected for name in c.m1.names if name != INTERCEPT)
    columns = sorted(_ordered((c.source, c.company) for c in selected), key=lambda sc: _source_rank(sc[0]))
    by_column = {(c.source, c.company): c.m1 for c in selected}

    def cell(fit: OlsFit, name: str) -> str:
        if name not in fit.names:
            return '-'
        return f'{fit.coefficients[name]:.6e}{significance_code(fit.p_values[name])}'

    headers = [target] + [f'{source.upper()} {company}'.strip() for source, company in columns]
    rows = [[name] + [cell(by_column[column], name) for column in columns] for name in regressors]
    return format_table(headers, rows)


def comparison_report(comparisons: Sequence[ModelComparison]) -> str:
    """
    Plain-text report: per target an improvement table and an M1 coefficient table.

    Empty input gives the header line of an improvement table.
    """
    if not comparisons:
        return improvement_table([])

    walk_forward = any(c.mode == WALK_FORWARD for c in comparisons)
    measure = 'forecast RMSE' if walk_forward else 'residual standard error'

    sections = []
    for target in _ordered(c.target for c in comparisons):
        selected = [c for c in comparisons if c.target == target]
        sections.append(f'{target}: {measure} improvement (%)\n' + improvement_table(selected))
        sections.append(f'{target}: sentiment model coefficients\n' + coefficient_table(selected, target))
    sections.append(SIGNIFICANCE_LEGEND)
    return '\n'.join(sections)


def comparisons_to_frame(comparisons: Iterable[ModelComparison]) -> pd.DataFrame:
    def optional(value: Optional[float]) -> str:
        return '' if value is None else format_float(value)

    rows = []
    for c in comparisons:
        rows.append({
            'source': c.source,
            'company': c.company,
            'target': c.target,
            'mode': c.mode,
            'n_obs': str(c.m1.n_obs),
            'rse_m0': format_float(c.m0.rse),
            'rse_m1': format_float(c.m1.rse),
            'r2_m0': format_float(c.m0.r_squared),
            'r2_m1': format_float(c.m1.r_squared),
            'rmse_m0': optional(c.m0_forecast_rmse),
            'rmse_m1': optional(c.m1_forecast_rmse),
            'improvement_pct': format_float(c.rse_improvement_pct),
        })
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS, dtype=str)


def coefficients_to_frame(comparisons: Iterable[ModelComparison]) -> pd.DataFrame:
    rows = []
    for c in comparisons:
        for model, fit in (('M0', c.m0), ('M1', c.m1)):
            for name in fit.names:
                rows.append({
                    'source': c.source,
                    'company': c.company,
                    'target': c.target,
                    'model': model,
                    'regressor': name,
                    'estimate': format_float(fit.coefficients[name]),
                    'std_error': format_float(fit.coefficient_se[name]),
                    't_stat': format_float(fit.t_stats[name]),
                    'p_value': format_float(fit.p_values[name]),
                    'code': significance_code(fit.p_values[name]),
                })
    return pd.DataFrame(rows, columns=COEFFICIENT_COLUMNS, dtype=str)


def summarize_improvements(comparisons: Iterable[ModelComparison]) -> Dict[Tuple[str, str], float]:
    """Mean improvement per (source, target)."""
    grouped: Dict[Tuple[str, str], List[float]] = {}
    for c in comparisons:
        grouped.setdefault((c.source, c.target), []).append(c.rse_improvement_pct)
    return {key: float(np.mean(values)) for key, values in grouped.items()}
