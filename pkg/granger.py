"""
Pairwise Granger-causality tests between financial variables and sentiment
analytics, and the causality graph built from their results.

X Granger-causes Y when adding k lags of X to an autoregression of Y on its own
k lags reduces the residual sum of squares by more than chance would allow.
Both directions are always tested.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from statcore import FTestResult, nested_f_test, ols_fit, significance_code
from timeseries import AlignedFrame, lagged_design, standardize
from utils import (
    DegenerateDataError,
    InsufficientDataError,
    ModelSpecificationError,
    fan_out,
    format_float,
    format_pvalue,
    format_table,
)

logger = logging.getLogger(__name__)

DEFAULT_LAG = 1
DEFAULT_ALPHA = 0.05

# (financial, sentiment) pairs tested for each target
ER_PAIRS: Tuple[Tuple[str, str], ...] = (('ER', 'SA'), ('ER', 'SR'), ('ER', 'G'), ('ER', 'B'))
VOL_PAIRS: Tuple[Tuple[str, str], ...] = (('VOL', 'SA'), ('VOL', 'SR'), ('VOL', 'G'), ('VOL', 'B'), ('VOL', 'V'))

RESULT_COLUMNS = ['source', 'company', 'cause', 'effect', 'k', 'f_stat', 'df_num', 'df_den', 'p_value', 'code']

# Column groups of the p-value tables, in display order
SOURCE_ORDER = ('twitter', 'news')


@dataclass(frozen=True)
class GrangerResult:
    """One directed test: does cause help predict effect for company?"""

    cause: str
    effect: str
    company: str
    lag_order: int
    f_test: FTestResult
    source: str = ''

    def __post_init__(self):
        if self.cause == self.effect:
            raise ModelSpecificationError(f"cause and effect must differ, got {self.cause!r} twice")

    @property
    def p_value(self) -> float:
        return self.f_test.p_value


@dataclass(frozen=True)
class CausalityGraph:
    """Variables joined by significant causalities; each edge carries the companies that show it."""

    nodes: FrozenSet[str] = frozenset()
    edges: FrozenSet[Tuple[str, str]] = frozenset()
    edge_labels: Dict[Tuple[str, str], FrozenSet[str]] = field(default_factory=dict)


def granger_test(
    x: Sequence[float],
    y: Sequence[float],
    k: int = DEFAULT_LAG,
    cause: str = 'X',
    effect: str = 'Y',
    company: str = '',
    source: str = '',
) -> GrangerResult:
    """
    Test whether x Granger-causes y with k lags.

    Both series are standardized first. The restricted model regresses y(t)
    on an intercept and y(t-1)..y(t-k); the full model adds x(t-1)..x(t-k).

    Args:
        x: Candidate cause, aligned with y
        y: Effect
        k: Lag order
        cause, effect: Variable names used in the result and regressor names
        company: Company symbol recorded on the result
        source: Sentiment source recorded on the result

    Returns:
        GrangerResult whose f_test has df_num == k

    Raises:
        InsufficientDataError: len - k <= 2k + 1
        DegenerateDataError: A constant input
        RankDeficiencyError: Collinear lags (e.g. x identical to y)
    """
    if cause == effect:
        raise ModelSpecificationError(f"cause and effect must differ, got {cause!r} twice")
    if k < 1:
        raise ModelSpecificationError(f"lag order must be at least 1, got {k}")

    x_values = np.asarray(x, dtype=float)
    y_values = np.asarray(y, dtype=float)
    if len(x_values) != len(y_values):
        raise ModelSpecificationError(f"series lengths differ ({len(x_values)} vs {len(y_values)})")

    n = len(y_values)
    if n - k <= 2 * k + 1:
        raise InsufficientDataError(f"{cause} -> {effect} with k={k} needs more than {3 * k + 1} observations, got {n}")

    standardized = {}
    for name, values in ((effect, y_values), (cause, x_values)):
        try:
            standardized[name] = standardize(values)
        except DegenerateDataError:
            raise DegenerateDataError(f"{company or 'series'} {name} has zero variance") from None

    index = x.index if isinstance(x, pd.Series) else pd.RangeIndex(n)
    frame = AlignedFrame(pd.DataFrame(standardized, index=index))

    lags = tuple(range(1, k + 1))
    restricted = ols_fit(lagged_design(frame, effect, {effect: lags}))
    full = ols_fit(lagged_design(frame, effect, {effect: lags, cause: lags}))
    f_test = nested_f_test(restricted, full)

    logger.debug(f"{source} {company} {cause} -> {effect} (k={k}): F={f_test.f_stat:.4f}, p={f_test.p_value:.4g}")

    return GrangerResult(cause=cause, effect=effect, company=company, lag_order=k, f_test=f_test, source=source)


def run_battery(
    frames: Mapping[str, AlignedFrame],
    pairs: Sequence[Tuple[str, str]],
    k: int = DEFAULT_LAG,
    source: str = '',
    workers: int = 1,
) -> List[GrangerResult]:
    """
    Run both directions of every (financial, sentiment) pair for every company.

    Results are ordered by company (mapping order), then pair, then direction
    (sentiment -> financial first), whatever the number of workers.

    Args:
        frames: Company symbol -> aligned frame holding the pair columns
        pairs: (financial, sentiment) column pairs, e.g. ER_PAIRS
        k: Lag order
        source: Sentiment source recorded on each result
        workers: Companies tested concurrently

    Raises:
        ModelSpecificationError: A frame lacks a requested column
    """
    def test_company(item: Tuple[str, AlignedFrame]) -> List[GrangerResult]:
        company, frame = item
        results = []
        for financial, sentiment in pairs:
            fin = pd.Series(frame.column(financial), index=frame.dates)
            sent = pd.Series(frame.column(sentiment), index=frame.dates)
            results.append(granger_test(sent, fin, k, sentiment, financial, company=company, source=source))
            results.append(granger_test(fin, sent, k, financial, sentiment, company=company, source=source))
        return results

    per_company = fan_out(test_company, list(frames.items()), workers)
    results = [result for company_results in per_company for result in company_results]
    logger.info(f"Ran {len(results)} Granger tests ({source or 'unnamed source'}, k={k}, {len(frames)} companies)")
    return results


def build_graph(results: Iterable[GrangerResult], alpha: float = DEFAULT_ALPHA) -> CausalityGraph:
    """
    Keep the edges cause -> effect where at least one company has p < alpha.

    Each edge is labelled with exactly the companies whose test is significant.
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")

    labels: Dict[Tuple[str, str], set] = {}
    for result in results:
        if result.p_value < alpha:
            labels.setdefault((result.cause, result.effect), set()).add(result.company)

    edges = frozenset(labels)
    nodes = frozenset(node for edge in edges for node in edge)
    return CausalityGraph(
        nodes=nodes,
        edges=edges,
        edge_labels={edge: frozenset(companies) for edge, companies in labels.items()},
    )


def _dot_label(companies: Iterable[str]) -> str:
    return ','.join(sorted(companies)).replace('\\', '\\\\').replace('"', '\\"')


def emit_dot(graph: CausalityGraph) -> str:
    """
    Render the graph in the DOT language.

    Nodes and edges are sorted so identical graphs give identical text.
    """
    lines = ['digraph causality {']
    for node in sorted(graph.nodes):
        lines.append(f'  {node};')
    for cause, effect in sorted(graph.edges):
        label = _dot_label(graph.edge_labels[(cause, effect)])
        lines.append(f'  {cause} -> {effect} [label="{label}"];')
    lines.append('}')
    return '\n'.join(lines) + '\n'


def results_to_frame(results: Iterable[GrangerResult]) -> pd.DataFrame:
    """Results table with floats at 17 significant digits."""
    rows = []
    for r in results:
        rows.append({
            'source': r.source,
            'company': r.company,
            'cause': r.cause,
            'effect': r.effect,
            'k': str(r.lag_order),
            'f_stat': format_float(r.f_test.f_stat),
            'df_num': str(r.f_test.df_num),
            'df_den': str(r.f_test.df_den),
            'p_value': format_float(r.p_value),
            'code': significance_code(r.p_value),
        })
    return pd.DataFrame(rows, columns=RESULT_COLUMNS, dtype=str)


def format_results_csv(results: Iterable[GrangerResult]) -> str:
    return results_to_frame(results).to_csv(index=False, lineterminator='\n')


def involves(result: GrangerResult, target: str) -> bool:
    """True when the test has target as its cause or effect."""
    return target in (result.cause, result.effect)


def pvalue_table(results: Sequence[GrangerResult], target: str) -> str:
    """
    p-values of every test involving target as a text table.

    Rows are "cause -> effect" in battery order; columns are grouped by source
    (twitter, then news, then any other) and then company in first-seen order.
    Cells read like "0.003***"; tests that were not run show "-".
    """
    selected = [r for r in results if involves(r, target)]

    rows: List[str] = []
    columns: List[Tuple[str, str]] = []
    cells: Dict[Tuple[str, Tuple[str, str]], str] = {}
    for r in selected:
        row = f'{r.cause} -> {r.effect}'
        if row not in rows:
            rows.append(row)
        column = (r.source, r.company)
        if column not in columns:
            columns.append(column)
        cells[(row, column)] = format_pvalue(r.p_value) + significance_code(r.p_value)

    def source_rank(source: str) -> int:
        return SOURCE_ORDER.index(source) if source in SOURCE_ORDER else len(SOURCE_ORDER)

    columns.sort(key=lambda c: source_rank(c[0]))
    headers = [f'{target}'] + [f'{source.upper()} {company}'.strip() for source, company in columns]
    body = [[row] + [cells.get((row, column), '-') for column in columns] for row in rows]
    return format_table(headers, body)
