"""
Daily sentiment analytics per company.

For both sources the pipeline works with five daily series:
    G   number of positive stories/messages
    B   number of negative stories/messages
    V   total number of stories/messages
    SA  absolute sentiment, G - B
    SR  relative sentiment in [-1, 1]

News SR is the mean normalized event sentiment score of the day's stories;
Twitter SR is (G - B) / (G + B). Days without any polarised input are neutral
(SR = 0).
"""

import logging
import math
from dataclasses import dataclass
from datetime import date
from typing import Dict, Iterable, List, NewType, Sequence

import pandas as pd

from ingest import NewsEvent, TwitterDailyRecord, filter_relevant
from utils import ValidationError

logger = logging.getLogger(__name__)

# Normalized event sentiment score in [-1, 1]; 0 is neutral
NormalizedEss = NewType('NormalizedEss', float)

ANALYTICS_COLUMNS = ['date', 'g', 'b', 'v', 'sa', 'sr']

# Series names used downstream (frames, designs, graphs)
SENTIMENT_VARIABLES = ('G', 'B', 'V', 'SA', 'SR')


@dataclass(frozen=True)
class DailyAnalytics:
    """Per-company sentiment bundle for one day."""

    date: date
    g: int
    b: int
    v: int
    sa: int
    sr: float

    def __post_init__(self):
        if self.sa != self.g - self.b:
            raise ValidationError(f"sa ({self.sa}) must equal g - b ({self.g - self.b})")
        if not -1.0 <= self.sr <= 1.0:
            raise ValidationError(f"sr must lie in [-1, 1], got {self.sr}")
        if self.g + self.b > self.v:
            raise ValidationError(f"g + b ({self.g + self.b}) exceeds v ({self.v})")


@dataclass(frozen=True)
class CompanySummary:
    """Story and message totals for one company over the whole sample."""

    company: str
    total_news: int
    relevant_news: int
    tweets: int


def normalize_ess(ess: int) -> NormalizedEss:
    """
    Map an event sentiment score from [0, 100] onto [-1, 1].

    50 is neutral and maps to 0; 100 maps to +1 and 0 to -1.
    """
    if not 0 <= ess <= 100:
        raise ValidationError(f"ess must be between 0 and 100, got {ess}")
    return NormalizedEss((ess - 50) / 50)


def aggregate_news_daily(
    events: Iterable[NewsEvent],
    company: str,
    calendar: Sequence[date],
) -> List[DailyAnalytics]:
    """
    Aggregate relevance-filtered stories into one DailyAnalytics per calendar date.

    Stories are bucketed by their own calendar date. A story is positive when its
    normalized score is strictly above 0 and negative when strictly below; neutral
    stories only count towards v. SR is the mean normalized score over all of the
    day's stories. Dates without stories are zero-filled.

    Args:
        events: Stories, already filtered by relevance; other companies are ignored
        company: Company symbol to aggregate
        calendar: Sorted, unique dates to report on

    Returns:
        One DailyAnalytics per calendar date, in calendar order
    """
    scores: Dict[date, List[float]] = {day: [] for day in calendar}
    for event in events:
        if event.company == company and event.date in scores:
            scores[event.date].append(normalize_ess(event.ess))

    daily = []
    for day in calendar:
        day_scores = scores[day]
        g = sum(1 for s in day_scores if s > 0)
        b = sum(1 for s in day_scores if s < 0)
        v = len(day_scores)
        # fsum is exactly rounded, so the mean does not depend on event order
        sr = math.fsum(day_scores) / v if v else 0.0
        daily.append(DailyAnalytics(date=day, g=g, b=b, v=v, sa=g - b, sr=sr))
    return daily


def derive_twitter_analytics(records: Iterable[TwitterDailyRecord]) -> List[DailyAnalytics]:
    """
    Turn daily message counts into analytics.

    g and b are the positive and negative counts, v the total volume (all
    languages). SR is (g - b) / (g + b), or 0 when there are no polarised
    messages. Neutral counts are not used.

    Args:
        records: Records of a single company, unique dates

    Returns:
        One DailyAnalytics per record, sorted by date
    """
    daily = []
    for record in sorted(records, key=lambda r: r.date):
        g, b = record.positive, record.negative
        sr = (g - b) / (g + b) if g + b > 0 else 0.0
        daily.append(DailyAnalytics(date=record.date, g=g, b=b, v=record.volume, sa=g - b, sr=sr))
    return daily


def records_for(records: Iterable[TwitterDailyRecord], company: str) -> List[TwitterDailyRecord]:
    """Twitter records of one company."""
    return [r for r in records if r.company == company]


def summarize_company(
    events: Sequence[NewsEvent],
    records: Sequence[TwitterDailyRecord],
    company: str,
    threshold: int,
) -> CompanySummary:
    """
    Count all stories, relevant stories and total messages for one company.

    Args:
        events: Unfiltered news events
        records: Twitter records
        company: Company symbol
        threshold: Relevance threshold defining a relevant story
    """
    company_events = [e for e in events if e.company == company]
    return CompanySummary(
        company=company,
        total_news=len(company_events),
        relevant_news=len(filter_relevant(company_events, threshold)),
        tweets=sum(r.volume for r in records if r.company == company),
    )


def analytics_to_frame(daily: Sequence[DailyAnalytics]) -> pd.DataFrame:
    """Tabular form with columns date,g,b,v,sa,sr for CSV export."""
    return pd.DataFrame(
        [(d.date.isoformat(), d.g, d.b, d.v, d.sa, d.sr) for d in daily],
        columns=ANALYTICS_COLUMNS,
    )


def analytics_series(daily: Sequence[DailyAnalytics]) -> Dict[str, pd.Series]:
    """
    Dated series G, B, V, SA and SR for alignment with the financial variables.
    """
    index = pd.DatetimeIndex([pd.Timestamp(d.date) for d in daily], name='date')
    return {
        'G': pd.Series([float(d.g) for d in daily], index=index, name='G'),
        'B': pd.Series([float(d.b) for d in daily], index=index, name='B'),
        'V': pd.Series([float(d.v) for d in daily], index=index, name='V'),
        'SA': pd.Series([float(d.sa) for d in daily], index=index, name='SA'),
        'SR': pd.Series([d.sr for d in daily], index=index, name='SR'),
    }
