"""
Shared utility functions for the sentiment causality pipeline.
Contains the error hierarchy, field parsers used by the feed readers,
number formatting, plain-text tables and the ordered fan-out helper.
"""

import asyncio
import math
import re
from datetime import date, datetime, time
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

T = TypeVar('T')
R = TypeVar('R')


# =============================================================================
# Errors
# =============================================================================

class PipelineError(Exception):
    """Base class for every failure the pipeline reports to the user."""

    exit_code = 1


class InputError(PipelineError):
    """Bad or missing input data. Carries the file and row it came from."""

    exit_code = 2

    def __init__(self, message: str, source: Optional[str] = None, row: Optional[int] = None):
        self.reason = message
        self.source = source
        self.row = row
        prefix = ''
        if source:
            prefix += f'{source}: '
        if row is not None:
            prefix += f'row {row}: '
        super().__init__(prefix + message)


class ParseError(InputError):
    """A row or field could not be parsed."""


class ValidationError(InputError):
    """A parsed value violates a documented bound or uniqueness rule."""


class StatisticalError(PipelineError):
    """The data cannot support the requested statistical computation."""


class DegenerateDataError(StatisticalError):
    """Zero variance, empty date intersection and similar degenerate samples."""


class InsufficientDataError(StatisticalError):
    """Too few observations for the requested lags or model size."""


class RankDeficiencyError(StatisticalError):
    """A design column is linearly dependent on the preceding ones."""


class ModelSpecificationError(StatisticalError):
    """Models or columns requested in a combination that cannot be estimated."""


# =============================================================================
# Field parsing
# =============================================================================

_INT_RE = re.compile(r'^[+-]?\d+$')
_COMPACT_DATE_RE = re.compile(r'^\d{8}$')
_DMY_DATE_RE = re.compile(r'^\d{2}/\d{2}/\d{4}$')
_ISO_DATE_RE = re.compile(r'^\d{4}-\d{2}-\d{2}$')

# Largest value the integer hour field can hold (23:59:59)
MAX_HOUR_FIELD = 235959


def parse_int_field(value: str, field: str) -> int:
    """
    Parse a strict integer field.

    Args:
        value: Raw field text
        field: Column name, used in the error message

    Returns:
        The integer value

    Raises:
        ValueError: If the text is not an optionally signed run of digits
    """
    text = value.strip() if isinstance(value, str) else ''
    if not _INT_RE.match(text):
        raise ValueError(f"{field} must be an integer, got {value!r}")
    return int(text)


def parse_compact_date(value: str) -> date:
    """Parse an 8-digit YYYYMMDD date (e.g. "20140105")."""
    text = value.strip() if isinstance(value, str) else ''
    if not _COMPACT_DATE_RE.match(text):
        raise ValueError(f"date must be 8 digits YYYYMMDD, got {value!r}")
    return datetime.strptime(text, '%Y%m%d').date()


def format_compact_date(day: date) -> str:
    """Inverse of parse_compact_date."""
    return day.strftime('%Y%m%d')


def parse_dmy_date(value: str) -> date:
    """Parse a DD/MM/YYYY date (e.g. "01/11/2013")."""
    text = value.strip() if isinstance(value, str) else ''
    if not _DMY_DATE_RE.match(text):
        raise ValueError(f"date must be DD/MM/YYYY, got {value!r}")
    return datetime.strptime(text, '%d/%m/%Y').date()


def format_dmy_date(day: date) -> str:
    """Inverse of parse_dmy_date."""
    return day.strftime('%d/%m/%Y')


def parse_iso_date(value: str) -> date:
    """Parse a YYYY-MM-DD date."""
    text = value.strip() if isinstance(value, str) else ''
    if not _ISO_DATE_RE.match(text):
        raise ValueError(f"date must be YYYY-MM-DD, got {value!r}")
    return date.fromisoformat(text)


def parse_hour_field(value: str) -> time:
    """
    Convert the integer HHMMSS hour field to a time of day.

    The feed stores the field as an integer, so leading zeros are dropped:
    "41357" is 04:13:57 and "210130" is 21:01:30. The value is padded back
    to six digits before splitting.

    Args:
        value: Raw field text

    Returns:
        datetime.time with seconds resolution

    Raises:
        ValueError: If the field is not an integer or not a valid 24h time
    """
    number = parse_int_field(value, 'hour')
    if number < 0 or number > MAX_HOUR_FIELD:
        raise ValueError(f"hour must be between 0 and {MAX_HOUR_FIELD}, got {number}")

    padded = f'{number:06d}'
    hours, minutes, seconds = int(padded[:2]), int(padded[2:4]), int(padded[4:])

    if hours > 23 or minutes > 59 or seconds > 59:
        raise ValueError(f"hour {value!r} is not a valid time of day")

    return time(hours, minutes, seconds)


def format_hour_field(moment: time) -> str:
    """
    Convert a time of day back to the integer HHMMSS field.

    Leading zeros are dropped, matching the feed: 04:13:57 becomes "41357".
    """
    return str(moment.hour * 10000 + moment.minute * 100 + moment.second)


def parse_price_field(value: str, field: str) -> float:
    """Parse a finite decimal price."""
    text = value.strip() if isinstance(value, str) else ''
    try:
        price = float(text)
    except ValueError:
        raise ValueError(f"{field} must be a decimal number, got {value!r}") from None
    if not math.isfinite(price):
        raise ValueError(f"{field} must be finite, got {value!r}")
    return price


# =============================================================================
# Number formatting
# =============================================================================

def format_float(value: float) -> str:
    """Machine-facing float: 17 significant digits, round-trips exactly."""
    return f'{value:.17g}'


def format_pvalue(p: float) -> str:
    """Human-facing p-value: 3 decimals."""
    return f'{p:.3f}'


def format_percent(value: float) -> str:
    """Human-facing percentage: 2 decimals, e.g. "8.34" or "-2.41"."""
    return f'{value:.2f}'


def format_table(headers: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    """
    Render a left-aligned plain-text table.

    The first column is left aligned, every other column right aligned.
    A table with no rows is just the header line.
    """
    rows = [list(row) for row in rows]
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))

    def render(cells: Sequence[str]) -> str:
        parts = []
        for i, cell in enumerate(cells):
            parts.append(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i]))
        return '  '.join(parts).rstrip()

    lines = [render(headers)]
    lines.extend(render(row) for row in rows)
    return '\n'.join(lines) + '\n'


# =============================================================================
# Company symbol validation
# =============================================================================

# Maximum length for a company symbol (RICs are short, names like
# "ABERCROMBIE & FITCH CO." are longer)
MAX_SYMBOL_LENGTH = 64

_SYMBOL_FORBIDDEN = re.compile(r'[/\\\x00-\x1f"]')


class ValidationResult:
    """Result of company symbol validation."""

    def __init__(self, is_valid: bool, error_message: Optional[str] = None, sanitized_symbol: Optional[str] = None):
        self.is_valid = is_valid
        self.error_message = error_message
        self.sanitized_symbol = sanitized_symbol

    def __bool__(self):
        return self.is_valid


def validate_symbol(symbol: str) -> ValidationResult:
    """
    Validate a company symbol used as a join key and as an output file stem.

    Args:
        symbol: The symbol to validate (e.g. "HD.N")

    Returns:
        ValidationResult with is_valid, error_message, and sanitized_symbol
    """
    if symbol is None:
        return ValidationResult(False, "Please enter a company symbol")

    if not isinstance(symbol, str):
        return ValidationResult(False, "Company symbol must be a string")

    sanitized = symbol.strip()

    if not sanitized:
        return ValidationResult(False, "Please enter a company symbol")

    if len(sanitized) > MAX_SYMBOL_LENGTH:
        return ValidationResult(False, f"Company symbol is too long (maximum {MAX_SYMBOL_LENGTH} characters)")

    if _SYMBOL_FORBIDDEN.search(sanitized):
        return ValidationResult(False, f"Company symbol {sanitized!r} contains path separators or control characters")

    return ValidationResult(True, None, sanitized)


def parse_symbol_list(text: str) -> List[str]:
    """
    Split a comma-separated company list, validating each symbol.

    Raises:
        ValidationError: On the first invalid symbol
    """
    symbols = []
    for part in text.split(','):
        if not part.strip():
            continue
        result = validate_symbol(part)
        if not result:
            raise ValidationError(result.error_message)
        if result.sanitized_symbol not in symbols:
            symbols.append(result.sanitized_symbol)
    return symbols


# =============================================================================
# Ordered fan-out
# =============================================================================

async def _gather_in_threads(func: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    semaphore = asyncio.Semaphore(workers)

    async def run_one(item: T) -> R:
        async with semaphore:
            return await asyncio.to_thread(func, item)

    return await asyncio.gather(*(run_one(item) for item in items))


def fan_out(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Apply func to every item, optionally on a pool of worker threads.

    Results come back in the same order as items regardless of completion
    order. The first exception raised by any call propagates.

    Args:
        func: Pure function of one item
        items: Work items
        workers: Maximum concurrent calls; 1 runs sequentially

    Returns:
        List of results in input order
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    return asyncio.run(_gather_in_threads(func, items, workers))
