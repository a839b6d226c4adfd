"""
Shared fixtures: synthetic feeds parsed back into aligned frames.
"""

import pytest

from finance import compute_financial_series
from ingest import filter_relevant, parse_market, parse_news, parse_twitter
from pipeline import FRAME_COLUMNS
from sentiment import aggregate_news_daily, analytics_series, derive_twitter_analytics, records_for
from synthgen import SyntheticSpec, generate
from timeseries import AlignedFrame, align


def synthetic_frame(spec: SyntheticSpec, source: str = 'twitter', company: str = None) -> AlignedFrame:
    """Generate a fixture, parse it through ingest and align ER, VOL and the source analytics."""
    fixture = generate(spec)
    company = company or spec.companies[0]
    stock = parse_market(fixture.market[company].decode('utf-8'))
    index = parse_market(fixture.index.decode('utf-8'))
    finance = compute_financial_series(stock, index)

    if source == 'twitter':
        daily = derive_twitter_analytics(records_for(parse_twitter(fixture.twitter.decode('utf-8')), company))
    else:
        events = filter_relevant(parse_news(fixture.news.decode('utf-8')))
        daily = aggregate_news_daily(events, company, [bar.date for bar in stock])

    series = analytics_series(daily)
    return align([finance.er, finance.vol] + [series[name] for name in FRAME_COLUMNS[2:]])


@pytest.fixture
def build_synthetic_frame():
    return synthetic_frame
