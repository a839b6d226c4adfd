"""
Run configuration.

Values come from, in order of precedence: command-line flags, SENTIMENT_*
environment variables, a flat TOML config file, and the defaults below.
"""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from granger import DEFAULT_ALPHA, DEFAULT_LAG
from ingest import DEFAULT_RELEVANCE_THRESHOLD
from predict import IN_SAMPLE, MODES
from utils import InputError, ValidationError, parse_symbol_list

logger = logging.getLogger(__name__)

ENV_PREFIX = 'SENTIMENT'

# Companies processed concurrently
DEFAULT_WORKERS = int(os.environ.get('SENTIMENT_WORKERS', 1))

DEFAULT_OUT = Path('out')

# Keys accepted in a config file (option names with dashes as underscores)
CONFIG_KEYS = frozenset({
    'news', 'twitter', 'market_dir', 'index', 'companies', 'relevance', 'lag', 'alpha', 'out', 'mode',
    'workers', 'seed', 'length', 'coupling', 'direction', 'noise_sd', 'target',
})


def env_var(option: str) -> str:
    """Environment variable for an option, e.g. market_dir -> SENTIMENT_MARKET_DIR."""
    return f'{ENV_PREFIX}_{option.upper()}'


def load_config_file(path: Path) -> Dict[str, Any]:
    """
    Read a flat TOML config file.

    A list of companies is accepted and joined into the comma-separated form
    the --companies flag takes.

    Raises:
        InputError: Invalid TOML
        ValidationError: Unknown keys or nested tables
    """
    try:
        with open(path, 'rb') as handle:
            content = tomllib.load(handle)
    except tomllib.TOMLDecodeError as e:
        raise InputError(f"invalid TOML ({e})", source=str(path)) from None

    values = {}
    for key, value in content.items():
        if key not in CONFIG_KEYS:
            raise ValidationError(f"unknown key {key!r}", source=str(path))
        if isinstance(value, dict):
            raise ValidationError(f"key {key!r} must be a plain value, not a table", source=str(path))
        if key == 'companies' and isinstance(value, list):
            value = ','.join(str(v) for v in value)
        values[key] = value

    logger.debug(f"Loaded {len(values)} settings from {path}")
    return values


@dataclass
class RunConfig:
    """Inputs, outputs and knobs of one pipeline run."""

    market_dir: Path
    index: Path
    news: Optional[Path] = None
    twitter: Optional[Path] = None
    companies: List[str] = field(default_factory=list)
    relevance: int = DEFAULT_RELEVANCE_THRESHOLD
    lag: int = DEFAULT_LAG
    alpha: float = DEFAULT_ALPHA
    out: Path = DEFAULT_OUT
    mode: str = IN_SAMPLE
    workers: int = DEFAULT_WORKERS

    @classmethod
    def from_options(cls, companies: str = '', **options) -> 'RunConfig':
        """Build from CLI options; companies is the comma-separated flag value."""
        return cls(companies=parse_symbol_list(companies or ''), **options)

    @property
    def sources(self) -> List[str]:
        """Sentiment sources with a configured feed."""
        return [name for name, path in (('news', self.news), ('twitter', self.twitter)) if path is not None]

    def market_file(self, company: str) -> Path:
        return self.market_dir / f'{company}.csv'

    def validate(self) -> 'RunConfig':
        """
        Check paths and bounds, fill in the company list and create the output directory.

        Companies default to the *.csv stems of market_dir (the index file excluded).

        Raises:
            InputError: A referenced path does not exist
            ValidationError: A value out of range, no sentiment feed, or no companies
        """
        for label, path in (('market directory', self.market_dir), ('index file', self.index),
                            ('news file', self.news), ('twitter file', self.twitter)):
            if path is not None and not Path(path).exists():
                raise InputError(f"{label} {path} does not exist", source=str(path))

        if not self.sources:
            raise ValidationError("at least one of the news and twitter feeds is required")
        if not 0 <= self.relevance <= 100:
            raise ValidationError(f"relevance must be between 0 and 100, got {self.relevance}")
        if self.lag < 1:
            raise ValidationError(f"lag must be at least 1, got {self.lag}")
        if not 0 < self.alpha < 1:
            raise ValidationError(f"alpha must lie strictly between 0 and 1, got {self.alpha}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.workers < 1:
            raise ValidationError(f"workers must be at least 1, got {self.workers}")

        if not self.companies:
            index_path = Path(self.index).resolve()
            self.companies = sorted(
                p.stem for p in Path(self.market_dir).glob('*.csv') if p.resolve() != index_path
            )
            logger.info(f"Found {len(self.companies)} companies in {self.market_dir}")
        if not self.companies:
            raise ValidationError(f"no companies given and no market files in {self.market_dir}")

        for company in self.companies:
            path = self.market_file(company)
            if not path.exists():
                raise InputError(f"market file for {company} does not exist", source=str(path))

        Path(self.out).mkdir(parents=True, exist_ok=True)
        return self
