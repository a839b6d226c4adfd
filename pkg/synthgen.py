"""
Seeded synthetic fixtures with a planted causal structure.

A fixture is a complete set of input files (news.csv, twitter.csv, one
market file per company and an index file) plus a JSON manifest of the
parameters that produced it. Every byte depends only on the SyntheticSpec.

Random numbers come from SplitMix64:

    state  <- state + 0x9E3779B97F4A7C15            (mod 2^64)
    z      <- (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB
    output <- z ^ (z >> 31)

Uniforms take the top 53 bits of an output (u = (x >> 11) * 2^-53), integers
in [lo, hi] are lo + x mod (hi - lo + 1), and normals use the Marsaglia polar
method with the spare variate kept for the next call. Rounding is Python's
round-half-to-even.

Draw order: the whole index path first (per day: return, range shock, range
split), then each company in turn, per day: mood, activity, return shock,
range shock, range split, neutral count, other-language count, story count,
then per story: relevance draw(s), score noise, time of day.

Planted structure per company and day t (SR is the twitter SR derived from the
drawn counts, all shocks standard normal):

    latent(t) = tanh(mood(t) [+ coupling * driver(t-1)  if finance->sentiment])
    c(t)      = max(2, round(base_count * exp(0.5 * activity(t))))
    G(t)      = round(c (1 + latent) / 2),  B(t) = round(c (1 - latent) / 2)
    ER(t)     = 0.01 * (noise_sd * shock(t) [+ coupling * SR(t-1)  if sentiment->finance, target ER])
    VOL(t)   ~= 0.02 * exp(0.25 * (noise_sd * range_shock(t) [+ coupling * SR(t-1)  if ..., target VOL]))

driver(t) is the target's own innovation, noise_sd * shock(t) for ER and
noise_sd * range_shock(t) for VOL. Stock prices are held within [MIN_PRICE, MAX_PRICE].
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import date, time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from ingest import MarketBar, NewsEvent, TwitterDailyRecord, format_market, format_news, format_twitter
from utils import ValidationError, validate_symbol

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
SPLITMIX_MUL2 = 0x94D049BB133111EB

MIN_LENGTH = 50

SENTIMENT_TO_FINANCE = 'sentiment->finance'
FINANCE_TO_SENTIMENT = 'finance->sentiment'
NO_COUPLING = 'none'
DIRECTIONS = (SENTIMENT_TO_FINANCE, FINANCE_TO_SENTIMENT, NO_COUPLING)
TARGETS = ('ER', 'VOL')

CALENDAR_START = date(2013, 11, 1)
INDEX_SYMBOL = 'INDEX'
INDEX_START_PRICE = 1000.0
STOCK_START_PRICE = 50.0
INDEX_RETURN_SD = 0.5
BASE_RANGE = 0.02
INDEX_BASE_RANGE = 0.01
RANGE_LOG_SCALE = 0.25
MAX_RANGE = 0.5
MAX_NOISE_SD = 100.0
# Simulated prices are held within [MIN_PRICE, MAX_PRICE]
MIN_PRICE = 0.01
MAX_PRICE = 1e9
LOG_MIN_PRICE = math.log(MIN_PRICE)
LOG_MAX_PRICE = math.log(MAX_PRICE)
# Range exponents above this give widths beyond MAX_RANGE
MAX_RANGE_EXPONENT = math.log(MAX_RANGE / BASE_RANGE)
ACTIVITY_LOG_SD = 0.5
MAX_STORIES_PER_DAY = 4
RELEVANT_STORY_PROBABILITY = 0.6
ESS_NOISE_SD = 15.0
PRICE_DECIMALS = 6
SECONDS_PER_DAY = 86400


class SplitMix64:
    """Portable 64-bit generator; see the module docstring for the exact algorithm."""

    def __init__(self, seed: int):
        self.state = seed & MASK64
        self._spare: Optional[float] = None

    def next_u64(self) -> int:
        self.state = (self.state + SPLITMIX_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * SPLITMIX_MUL1) & MASK64
        z = ((z ^ (z >> 27)) * SPLITMIX_MUL2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def integer(self, low: int, high: int) -> int:
        """Integer in [low, high], both inclusive."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        return low + self.next_u64() % (high - low + 1)

    def normal(self) -> float:
        """Standard normal variate (Marsaglia polar method)."""
        if self._spare is not None:
            value, self._spare = self._spare, None
            return value
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        factor = math.sqrt(-2.0 * math.log(s) / s)
        self._spare = v * factor
        return u * factor


@dataclass(frozen=True)
class SyntheticSpec:
    """
    Parameters of a synthetic fixture.

    Raises:
        ValidationError: length below MIN_LENGTH, noise_sd outside (0, MAX_NOISE_SD], unknown
            direction or target, invalid company symbols or a seed outside 64 bits
    """

    seed: int = 0
    length: int = 200
    coupling: float = 0.8
    direction: str = SENTIMENT_TO_FINANCE
    noise_sd: float = 1.0
    target: str = 'ER'
    companies: Tuple[str, ...] = ('SYN.N',)
    base_count: int = 20

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.length < MIN_LENGTH:
            raise ValidationError(f"length must be at least {MIN_LENGTH} trading days, got {self.length}")
        if not (math.isfinite(self.noise_sd) and 0 < self.noise_sd <= MAX_NOISE_SD):
            raise ValidationError(f"noise_sd must lie in (0, {MAX_NOISE_SD:g}], got {self.noise_sd}")
        if not math.isfinite(self.coupling):
            raise ValidationError(f"coupling must be finite, got {self.coupling}")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {', '.join(DIRECTIONS)}, got {self.direction!r}")
        if self.target not in TARGETS:
            raise ValidationError(f"target must be one of {', '.join(TARGETS)}, got {self.target!r}")
        if self.base_count < 2:
            raise ValidationError(f"base_count must be at least 2, got {self.base_count}")
        if not self.companies:
            raise ValidationError("at least one company is required")
        for company in self.companies:
            result = validate_symbol(company)
            if not result or result.sanitized_symbol != company:
                raise ValidationError(result.error_message or f"invalid company symbol {company!r}")
            if company == INDEX_SYMBOL:
                raise ValidationError(f"{INDEX_SYMBOL} is reserved for the index")
        if len(set(self.companies)) != len(self.companies):
            raise ValidationError("company symbols must be unique")


@dataclass(frozen=True)
class SyntheticFixture:
    """Serialized fixture files."""

    spec: SyntheticSpec
    market: Dict[str, bytes] = field(default_factory=dict)
    index: bytes = b''
    twitter: bytes = b''
    news: bytes = b''
    manifest: bytes = b''


def trading_calendar(length: int, start: date = CALENDAR_START) -> List[date]:
    """length consecutive weekdays starting at (or after) start."""
    return [d.date() for d in pd.bdate_range(start=pd.Timestamp(start), periods=length)]


def _round_price(value: float) -> float:
    return round(value, PRICE_DECIMALS)


def _clamp_log_price(log_price: float) -> float:
    return min(max(log_price, LOG_MIN_PRICE), LOG_MAX_PRICE)


def _bar(close: float, width: float, split: float) -> Tuple[float, float, float]:
    """Close, high and low for a day with relative range width split at split."""
    width = min(width, MAX_RANGE)
    close = _round_price(close)
    high = _round_price(close * (1.0 + split * width))
    low = _round_price(close * (1.0 - (1.0 - split) * width))
    return close, high, low


def _index_path(rng: SplitMix64, calendar: List[date]) -> Tuple[List[MarketBar], List[float]]:
    bars = []
    returns = []
    log_price = math.log(INDEX_START_PRICE)
    for t, day in enumerate(calendar):
        ret = 0.01 * INDEX_RETURN_SD * rng.normal()
        range_shock = rng.normal()
        split = rng.uniform()
        if t > 0:
            log_price += ret
        returns.append(ret if t > 0 else 0.0)
        width = INDEX_BASE_RANGE * math.exp(RANGE_LOG_SCALE * range_shock)
        close, high, low = _bar(math.exp(log_price), width, split)
        bars.append(MarketBar(date=day, close=close, high=high, low=low))
    return bars, returns


def _company_path(
    rng: SplitMix64,
    spec: SyntheticSpec,
    company: str,
    calendar: List[date],
    index_returns: List[float],
) -> Tuple[List[MarketBar], List[TwitterDailyRecord], List[Tuple[date, int, str, int, int]]]:
    bars = []
    records = []
    stories = []

    log_price = math.log(STOCK_START_PRICE)
    previous_sr = 0.0
    previous_driver = 0.0
    planted = spec.direction == SENTIMENT_TO_FINANCE

    for t, day in enumerate(calendar):
        mood = rng.normal()
        activity = rng.normal()
        shock = rng.normal()
        range_shock = rng.normal()
        split = rng.uniform()

        if spec.direction == FINANCE_TO_SENTIMENT and t > 0:
            latent = math.tanh(mood + spec.coupling * previous_driver)
        else:
            latent = math.tanh(mood)

        count = max(2, round(spec.base_count * math.exp(ACTIVITY_LOG_SD * activity)))
        positive = round(count * (1.0 + latent) / 2.0)
        negative = round(count * (1.0 - latent) / 2.0)
        neutral = rng.integer(0, count)
        other_language = rng.integer(0, count)
        records.append(TwitterDailyRecord(
            date=day,
            company=company,
            volume=positive + negative + neutral + other_language,
            positive=positive,
            negative=negative,
            neutral=neutral,
        ))

        excess = spec.noise_sd * shock
        log_range = spec.noise_sd * range_shock
        if planted and t > 0:
            if spec.target == 'ER':
                excess += spec.coupling * previous_sr
            else:
                log_range += spec.coupling * previous_sr
        if t > 0:
            log_price = _clamp_log_price(log_price + index_returns[t] + 0.01 * excess)

        width = BASE_RANGE * math.exp(min(RANGE_LOG_SCALE * log_range, MAX_RANGE_EXPONENT))
        close, high, low = _bar(math.exp(log_price), width, split)
        bars.append(MarketBar(date=day, close=close, high=high, low=low))

        for _ in range(rng.integer(0, MAX_STORIES_PER_DAY)):
            if rng.uniform() < RELEVANT_STORY_PROBABILITY:
                relevance = 100
            else:
                relevance = rng.integer(0, 99)
            ess = round(50.0 + 50.0 * latent + ESS_NOISE_SD * rng.normal())
            ess = min(100, max(0, ess))
            seconds = rng.integer(0, SECONDS_PER_DAY - 1)
            stories.append((day, seconds, company, relevance, ess))

        previous_sr = (positive - negative) / (positive + negative)
        previous_driver = spec.noise_sd * (shock if spec.target == 'ER' else range_shock)

    return bars, records, stories


def _manifest(spec: SyntheticSpec, market_files: List[str]) -> bytes:
    content = asdict(spec)
    content['companies'] = list(spec.companies)
    content['generator'] = 'splitmix64'
    content['calendar_start'] = CALENDAR_START.isoformat()
    content['files'] = ['news.csv', 'twitter.csv', 'index.csv'] + market_files
    return (json.dumps(content, indent=2, sort_keys=True) + '\n').encode('utf-8')


def generate(spec: SyntheticSpec) -> SyntheticFixture:
    """
    Generate every fixture file for spec.

    The same spec always yields byte-identical files, and every file parses
    through the ingest readers.
    """
    rng = SplitMix64(spec.seed)
    calendar = trading_calendar(spec.length)
    index_bars, index_returns = _index_path(rng, calendar)

    market: Dict[str, bytes] = {}
    all_records: List[TwitterDailyRecord] = []
    all_stories: List[Tuple[date, int, str, int, int]] = []
    for company in spec.companies:
        bars, records, stories = _company_path(rng, spec, company, calendar, index_returns)
        market[company] = format_market(bars).encode('utf-8')
        all_records.extend(records)
        all_stories.extend(stories)

    # Story ids follow publication order
    all_stories.sort(key=lambda s: (s[0], s[1], spec.companies.index(s[2])))
    events = [
        NewsEvent(
            story_id=str(i + 1),
            company=company,
            date=day,
            time=time(seconds // 3600, seconds % 3600 // 60, seconds % 60),
            relevance=relevance,
            ess=ess,
        )
        for i, (day, seconds, company, relevance, ess) in enumerate(all_stories)
    ]

    logger.info(
        f"Generated {spec.length} days for {len(spec.companies)} companies "
        f"({spec.direction}, target {spec.target}, coupling {spec.coupling}, seed {spec.seed}): "
        f"{len(events)} stories"
    )

    return SyntheticFixture(
        spec=spec,
        market=market,
        index=format_market(index_bars).encode('utf-8'),
        twitter=format_twitter(all_records).encode('utf-8'),
        news=format_news(events).encode('utf-8'),
        manifest=_manifest(spec, [f'market/{company}.csv' for company in spec.companies]),
    )


def write_fixture(fixture: SyntheticFixture, directory: Path) -> List[Path]:
    """
    Write the fixture under directory:

        news.csv, twitter.csv, index.csv, manifest.json, market/<SYMBOL>.csv

    Returns:
        Paths written, in the order above
    """
    directory = Path(directory)
    (directory / 'market').mkdir(parents=True, exist_ok=True)

    files = [
        (directory / 'news.csv', fixture.news),
        (directory / 'twitter.csv', fixture.twitter),
        (directory / 'index.csv', fixture.index),
        (directory / 'manifest.json', fixture.manifest),
    ]
    files.extend((directory / 'market' / f'{company}.csv', content) for company, content in fixture.market.items())

    for path, content in files:
        path.write_bytes(content)
        logger.debug(f"Wrote {path} ({len(content)} bytes)")
    return [path for path, _ in files]
