"""
Loads the feeds named by a RunConfig and turns them into per-company series
and aligned frames.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from config import RunConfig
from finance import FinancialSeries, compute_financial_series
from ingest import MarketBar, NewsEvent, TwitterDailyRecord, filter_relevant, load_market, load_news, load_twitter
from sentiment import (
    CompanySummary,
    DailyAnalytics,
    aggregate_news_daily,
    analytics_series,
    derive_twitter_analytics,
    records_for,
    summarize_company,
)
from timeseries import AlignedFrame, align
from utils import fan_out

logger = logging.getLogger(__name__)

SOURCES = ('news', 'twitter')

# Column order of the per-source frames
FRAME_COLUMNS = ('ER', 'VOL', 'G', 'B', 'V', 'SA', 'SR')


@dataclass(frozen=True)
class LoadedInputs:
    """Parsed feeds of one run."""

    index_bars: List[MarketBar]
    market: Dict[str, List[MarketBar]]
    events: Optional[List[NewsEvent]] = None
    relevant_events: Optional[List[NewsEvent]] = None
    records: Optional[List[TwitterDailyRecord]] = None


@dataclass(frozen=True)
class CompanyData:
    """Financial series and daily analytics of one company."""

    company: str
    finance: FinancialSeries
    summary: CompanySummary
    analytics: Dict[str, List[DailyAnalytics]] = field(default_factory=dict)


def load_inputs(config: RunConfig) -> LoadedInputs:
    """Parse every configured feed. The relevance filter is applied here."""
    events = relevant = records = None
    if config.news is not None:
        events = load_news(config.news)
        relevant = filter_relevant(events, config.relevance)
        logger.info(f"Parsed {len(events)} news events, {len(relevant)} with relevance >= {config.relevance}")
    if config.twitter is not None:
        records = load_twitter(config.twitter)
        logger.info(f"Parsed {len(records)} twitter records")
    else:
        logger.warning("No twitter feed configured; twitter analytics skipped")
    if config.news is None:
        logger.warning("No news feed configured; news analytics skipped")

    index_bars = load_market(config.index)
    market = {company: load_market(config.market_file(company)) for company in config.companies}
    logger.info(f"Parsed {len(index_bars)} index bars and market data for {len(market)} companies")

    return LoadedInputs(index_bars=index_bars, market=market, events=events, relevant_events=relevant, records=records)


def build_company(inputs: LoadedInputs, company: str, relevance: int) -> CompanyData:
    """
    Financial series plus news and twitter analytics for one company.

    News is bucketed on the stock's trading calendar and zero-filled; twitter
    analytics cover the days present in the feed.
    """
    bars = inputs.market[company]
    finance = compute_financial_series(bars, inputs.index_bars)

    analytics = {}
    if inputs.relevant_events is not None:
        calendar = [bar.date for bar in bars]
        analytics['news'] = aggregate_news_daily(inputs.relevant_events, company, calendar)
    if inputs.records is not None:
        analytics['twitter'] = derive_twitter_analytics(records_for(inputs.records, company))

    for source, daily in analytics.items():
        if all(d.v == 0 for d in daily):
            logger.warning(f"{company}: no {source} activity on any day")

    summary = summarize_company(inputs.events or [], inputs.records or [], company, relevance)
    logger.debug(f"{company}: {summary.relevant_news}/{summary.total_news} relevant stories, {summary.tweets} tweets")

    return CompanyData(company=company, finance=finance, summary=summary, analytics=analytics)


def build_companies(inputs: LoadedInputs, config: RunConfig) -> List[CompanyData]:
    """build_company for every configured company, in config order."""
    companies = fan_out(
        lambda company: build_company(inputs, company, config.relevance),
        config.companies,
        config.workers,
    )
    logger.info(f"Built series for {len(companies)} companies")
    return companies


def company_frame(data: CompanyData, source: str) -> AlignedFrame:
    """ER, VOL and the source's five analytics on their common dates."""
    series = analytics_series(data.analytics[source])
    return align([data.finance.er, data.finance.vol] + [series[name] for name in FRAME_COLUMNS[2:]])


def source_frames(companies: List[CompanyData], source: str) -> Dict[str, AlignedFrame]:
    """Company symbol -> aligned frame for one source, in company order."""
    return {data.company: company_frame(data, source) for data in companies if source in data.analytics}
