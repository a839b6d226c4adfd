"""
Readers and writers for the three external feeds.

- news.csv     story_id,company,date,hour,relevance,ess
- twitter.csv  date,company,volume,positive,negative,neutral
- market.csv   date,close,high,low   (one file per symbol, plus one for the index)

All files are UTF-8, comma separated, RFC 4180 quoting, header row mandatory.
Errors name the source and the 1-based row number (the header is row 1).
Blank lines are skipped but still counted.
"""

import io
import logging
import re
from dataclasses import dataclass
from datetime import date, time
from pathlib import Path
from typing import Callable, Iterable, List, Optional, TextIO, Tuple, TypeVar, Union

import pandas as pd

from utils import (
    ParseError,
    ValidationError,
    format_compact_date,
    format_dmy_date,
    format_hour_field,
    parse_compact_date,
    parse_dmy_date,
    parse_hour_field,
    parse_int_field,
    parse_iso_date,
    parse_price_field,
    validate_symbol,
)

logger = logging.getLogger(__name__)

NEWS_COLUMNS = ['story_id', 'company', 'date', 'hour', 'relevance', 'ess']
TWITTER_COLUMNS = ['date', 'company', 'volume', 'positive', 'negative', 'neutral']
MARKET_COLUMNS = ['date', 'close', 'high', 'low']

# Relevance of 100 means the company is the subject of the story
DEFAULT_RELEVANCE_THRESHOLD = 100

Stream = Union[str, TextIO]
Record = TypeVar('Record')

_CONTROL_CHARS_RE = re.compile(r'[\x00-\x1f\x7f]')


def _check_company(company: str) -> None:
    result = validate_symbol(company)
    if not result:
        raise ValidationError(result.error_message)
    if result.sanitized_symbol != company:
        raise ValidationError(f"company {company!r} has leading or trailing whitespace")


def _check_story_id(story_id: str) -> None:
    if not isinstance(story_id, str) or not story_id.strip():
        raise ValidationError("story_id must not be empty")
    if story_id != story_id.strip():
        raise ValidationError(f"story_id {story_id!r} has leading or trailing whitespace")
    if _CONTROL_CHARS_RE.search(story_id):
        raise ValidationError(f"story_id {story_id!r} contains control characters")


# =============================================================================
# Records
# =============================================================================

@dataclass(frozen=True)
class NewsEvent:
    """One scored news story."""

    story_id: str
    company: str
    date: date
    time: time
    relevance: int
    ess: int

    def __post_init__(self):
        _check_story_id(self.story_id)
        _check_company(self.company)
        if not 0 <= self.relevance <= 100:
            raise ValidationError(f"relevance must be between 0 and 100, got {self.relevance}")
        if not 0 <= self.ess <= 100:
            raise ValidationError(f"ess must be between 0 and 100, got {self.ess}")


@dataclass(frozen=True)
class TwitterDailyRecord:
    """Daily message counts for one company. Polarity counts cover English messages only."""

    date: date
    company: str
    volume: int
    positive: int
    negative: int
    neutral: int

    def __post_init__(self):
        _check_company(self.company)
        for name in ('volume', 'positive', 'negative', 'neutral'):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.positive + self.negative + self.neutral > self.volume:
            raise ValidationError(
                f"positive + negative + neutral ({self.positive + self.negative + self.neutral}) "
                f"exceeds volume ({self.volume})"
            )


@dataclass(frozen=True)
class MarketBar:
    """Daily close/high/low for a stock or index."""

    date: date
    close: float
    high: float
    low: float

    def __post_init__(self):
        for name in ('close', 'high', 'low'):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.high < self.low:
            raise ValidationError(f"high ({self.high}) is below low ({self.low})")
        if not self.low <= self.close <= self.high:
            raise ValidationError(f"close ({self.close}) lies outside [low, high] = [{self.low}, {self.high}]")


# =============================================================================
# Parsing
# =============================================================================

_PANDAS_LINE_RE = re.compile(r'line (\d+)')


def _read_rows(records: Stream, columns: List[str], source: str) -> Optional[pd.DataFrame]:
    """Read a CSV stream as strings and check its header. None for an empty stream."""
    handle = io.StringIO(records) if isinstance(records, str) else records
    try:
        frame = pd.read_csv(handle, dtype=str, keep_default_na=False, na_filter=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        return None
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE_RE.search(str(e))
        row = int(match.group(1)) if match else None
        raise ParseError(f"malformed row ({e})", source=source, row=row) from None

    header = [str(c).strip() for c in frame.columns]
    if header != columns:
        raise ParseError(
            f"header {','.join(header)!r} does not match expected {','.join(columns)!r}",
            source=source,
            row=1,
        )
    return frame


def _is_blank(row: dict) -> bool:
    return all(not isinstance(v, str) or not v.strip() for v in row.values())


def _convert_rows(
    frame: Optional[pd.DataFrame],
    convert: Callable[[dict], Record],
    source: str,
) -> List[Tuple[int, Record]]:
    """Convert each non-blank row, paired with its row number in the file."""
    if frame is None:
        return []

    converted = []
    for offset, row in enumerate(frame.to_dict('records')):
        row_number = offset + 2
        if _is_blank(row):
            continue
        if any(not isinstance(v, str) for v in row.values()):
            raise ParseError("row has missing fields", source=source, row=row_number)
        try:
            converted.append((row_number, convert(row)))
        except ValidationError as e:
            raise ValidationError(e.reason, source=source, row=row_number) from None
        except ValueError as e:
            raise ParseError(str(e), source=source, row=row_number) from None
    return converted


def _news_from_row(row: dict) -> NewsEvent:
    return NewsEvent(
        story_id=row['story_id'].strip(),
        company=row['company'].strip(),
        date=parse_compact_date(row['date']),
        time=parse_hour_field(row['hour']),
        relevance=parse_int_field(row['relevance'], 'relevance'),
        ess=parse_int_field(row['ess'], 'ess'),
    )


def _twitter_from_row(row: dict) -> TwitterDailyRecord:
    return TwitterDailyRecord(
        date=parse_dmy_date(row['date']),
        company=row['company'].strip(),
        volume=parse_int_field(row['volume'], 'volume'),
        positive=parse_int_field(row['positive'], 'positive'),
        negative=parse_int_field(row['negative'], 'negative'),
        neutral=parse_int_field(row['neutral'], 'neutral'),
    )


def _market_from_row(row: dict) -> MarketBar:
    return MarketBar(
        date=parse_iso_date(row['date']),
        close=parse_price_field(row['close'], 'close'),
        high=parse_price_field(row['high'], 'high'),
        low=parse_price_field(row['low'], 'low'),
    )


def parse_news(records: Stream, source: str = 'news.csv') -> List[NewsEvent]:
    """
    Parse the news analytics feed.

    Args:
        records: CSV text or an open text stream
        source: Name used in error messages

    Returns:
        One NewsEvent per data row, in input order

    Raises:
        ParseError: Bad header, malformed row or unparseable field
        ValidationError: relevance or ess outside [0, 100]
    """
    events = [e for _, e in _convert_rows(_read_rows(records, NEWS_COLUMNS, source), _news_from_row, source)]
    logger.debug(f"Parsed {len(events)} news events from {source}")
    return events


def parse_twitter(records: Stream, source: str = 'twitter.csv') -> List[TwitterDailyRecord]:
    """
    Parse the daily Twitter analytics feed.

    Raises:
        ParseError: Bad header, malformed row or unparseable date/count
        ValidationError: Negative count, polarity counts above volume,
            or a repeated (date, company) pair
    """
    frame = _read_rows(records, TWITTER_COLUMNS, source)
    numbered = _convert_rows(frame, _twitter_from_row, source)

    seen = set()
    for row_number, record in numbered:
        key = (record.date, record.company)
        if key in seen:
            raise ValidationError(
                f"duplicate row for {record.company} on {record.date.isoformat()}",
                source=source,
                row=row_number,
            )
        seen.add(key)

    parsed = [record for _, record in numbered]
    logger.debug(f"Parsed {len(parsed)} twitter records from {source}")
    return parsed


def parse_market(records: Stream, source: str = 'market.csv') -> List[MarketBar]:
    """
    Parse a daily price file.

    Returns:
        Bars sorted ascending by date

    Raises:
        ParseError: Bad header, malformed row or unparseable field
        ValidationError: Non-positive price, high below low, close outside
            the day's range, or a repeated date
    """
    numbered = _convert_rows(_read_rows(records, MARKET_COLUMNS, source), _market_from_row, source)

    first_row = {}
    for row_number, bar in numbered:
        if bar.date in first_row:
            raise ValidationError(
                f"duplicate date {bar.date.isoformat()} (first seen on row {first_row[bar.date]})",
                source=source,
                row=row_number,
            )
        first_row[bar.date] = row_number

    bars = [bar for _, bar in numbered]
    logger.debug(f"Parsed {len(bars)} market bars from {source}")
    return sorted(bars, key=lambda b: b.date)


def filter_relevant(events: Iterable[NewsEvent], threshold: int = DEFAULT_RELEVANCE_THRESHOLD) -> List[NewsEvent]:
    """
    Keep the events whose relevance is at least threshold, preserving order.

    Raises:
        ValidationError: threshold outside [0, 100]
    """
    if not 0 <= threshold <= 100:
        raise ValidationError(f"relevance threshold must be between 0 and 100, got {threshold}")
    return [e for e in events if e.relevance >= threshold]


def _read_file(path: Path, parse: Callable[[Stream, str], List[Record]]) -> List[Record]:
    with open(path, encoding='utf-8', newline='') as handle:
        return parse(handle, str(path))


def load_news(path: Path) -> List[NewsEvent]:
    """Parse a news.csv file from disk."""
    return _read_file(path, parse_news)


def load_twitter(path: Path) -> List[TwitterDailyRecord]:
    """Parse a twitter.csv file from disk."""
    return _read_file(path, parse_twitter)


def load_market(path: Path) -> List[MarketBar]:
    """Parse a market.csv file from disk."""
    return _read_file(path, parse_market)


# =============================================================================
# Writing
# =============================================================================

def _to_csv(rows: List[dict], columns: List[str]) -> str:
    frame = pd.DataFrame(rows, columns=columns, dtype=str)
    return frame.to_csv(index=False, lineterminator='\n')


def format_news(events: Iterable[NewsEvent]) -> str:
    """Serialize events in the news.csv schema (parse_news reads it back unchanged)."""
    rows = [
        {
            'story_id': e.story_id,
            'company': e.company,
            'date': format_compact_date(e.date),
            'hour': format_hour_field(e.time),
            'relevance': str(e.relevance),
            'ess': str(e.ess),
        }
        for e in events
    ]
    return _to_csv(rows, NEWS_COLUMNS)


def format_twitter(records: Iterable[TwitterDailyRecord]) -> str:
    """Serialize records in the twitter.csv schema."""
    rows = [
        {
            'date': format_dmy_date(r.date),
            'company': r.company,
            'volume': str(r.volume),
            'positive': str(r.positive),
            'negative': str(r.negative),
            'neutral': str(r.neutral),
        }
        for r in records
    ]
    return _to_csv(rows, TWITTER_COLUMNS)


def format_market(bars: Iterable[MarketBar]) -> str:
    """Serialize bars in the market.csv schema; prices use the shortest round-trip repr."""
    rows = [
        {'date': b.date.isoformat(), 'close': repr(b.close), 'high': repr(b.high), 'low': repr(b.low)}
        for b in bars
    ]
    return _to_csv(rows, MARKET_COLUMNS)
