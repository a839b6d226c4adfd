"""
Sentiment causality pipeline - command-line entry point.

Subcommands:
- analytics  per-company sentiment and financial series as CSV
- granger    Granger-causality results table and causality graphs (DOT)
- predict    M0 versus M1 model comparisons and report
- report     everything above in one plain-text report
- synth      seeded synthetic input fixture

Exit codes: 0 success, 1 statistical failure, 2 input or usage error.
"""

import logging
import os
from pathlib import Path
from typing import List, Tuple

import click
import pandas as pd
import sentry_sdk

from config import DEFAULT_OUT, DEFAULT_WORKERS, RunConfig, env_var, load_config_file
from granger import (
    DEFAULT_ALPHA,
    DEFAULT_LAG,
    ER_PAIRS,
    VOL_PAIRS,
    GrangerResult,
    build_graph,
    emit_dot,
    format_results_csv,
    involves,
    pvalue_table,
    run_battery,
)
from ingest import DEFAULT_RELEVANCE_THRESHOLD
from pipeline import CompanyData, build_companies, load_inputs, source_frames
from predict import (
    IN_SAMPLE,
    MODES,
    ModelComparison,
    coefficients_to_frame,
    compare_models,
    comparison_report,
    comparisons_to_frame,
    summarize_improvements,
)
from sentiment import analytics_to_frame
from synthgen import DIRECTIONS, SENTIMENT_TO_FINANCE, TARGETS, SyntheticSpec, generate, write_fixture
from utils import PipelineError, format_table, parse_symbol_list

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

TARGET_PAIRS = (('ER', ER_PAIRS), ('VOL', VOL_PAIRS))

_existing_file = click.Path(exists=True, dir_okay=False, path_type=Path)
_existing_dir = click.Path(exists=True, file_okay=False, path_type=Path)
_out_dir = click.Path(file_okay=False, path_type=Path)


def init_sentry():
    """Error reporting; a missing SENTRY_DSN leaves it disabled."""
    sentry_sdk.init(
        dsn=os.environ.get("SENTRY_DSN"),
        environment=os.environ.get("ENVIRONMENT", "production"),
        traces_sample_rate=0.1,
    )


class PipelineGroup(click.Group):
    """Turns PipelineError into a message on stderr and its exit code."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except PipelineError as e:
            logger.debug("Pipeline failed", exc_info=True)
            click.echo(f"Error: {e}", err=True)
            ctx.exit(e.exit_code)


def write_output(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode('utf-8'))
    logger.debug(f"Wrote {path}")
    return path


def input_options(func):
    """Options shared by the commands that read the feeds."""
    options = [
        click.option('--news', type=_existing_file, envvar=env_var('news'), help='News analytics CSV.'),
        click.option('--twitter', type=_existing_file, envvar=env_var('twitter'), help='Daily twitter analytics CSV.'),
        click.option('--market-dir', required=True, type=_existing_dir, envvar=env_var('market_dir'),
                     help='Directory of <SYMBOL>.csv price files.'),
        click.option('--index', required=True, type=_existing_file, envvar=env_var('index'),
                     help='Price file of the market index.'),
        click.option('--companies', default='', envvar=env_var('companies'),
                     help='Comma-separated symbols (default: every file in --market-dir).'),
        click.option('--relevance', type=click.IntRange(0, 100), default=DEFAULT_RELEVANCE_THRESHOLD,
                     envvar=env_var('relevance'), show_default=True, help='Minimum news relevance.'),
        click.option('--out', type=_out_dir, default=DEFAULT_OUT, envvar=env_var('out'), show_default=True,
                     help='Output directory.'),
        click.option('--workers', type=click.IntRange(min=1), default=DEFAULT_WORKERS, envvar=env_var('workers'),
                     show_default=True, help='Companies processed concurrently.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


lag_option = click.option('--lag', type=click.IntRange(min=1), default=DEFAULT_LAG, envvar=env_var('lag'),
                          show_default=True, help='Granger lag order k.')
alpha_option = click.option('--alpha', type=click.FloatRange(0, 1, min_open=True, max_open=True),
                            default=DEFAULT_ALPHA, envvar=env_var('alpha'), show_default=True,
                            help='Significance level for graph edges.')
mode_option = click.option('--mode', type=click.Choice(MODES), default=IN_SAMPLE, envvar=env_var('mode'),
                           show_default=True, help='Model comparison mode.')


@click.group(cls=PipelineGroup)
@click.option('--config', 'config_file', type=_existing_file, help='Flat TOML file of option defaults.')
@click.option('-v', '--verbose', is_flag=True, help='Debug logging.')
@click.option('-q', '--quiet', is_flag=True, help='Warnings and errors only.')
@click.pass_context
def cli(ctx, config_file, verbose, quiet):
    """Sentiment analytics, Granger causality and predictive models for stock data."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    init_sentry()

    if config_file is not None:
        values = load_config_file(config_file)
        ctx.default_map = {name: values for name in ctx.command.commands}


# =============================================================================
# Stages
# =============================================================================

def _prepare(options: dict) -> Tuple[RunConfig, List[CompanyData]]:
    config = RunConfig.from_options(**options).validate()
    inputs = load_inputs(config)
    return config, build_companies(inputs, config)


def write_analytics(config: RunConfig, companies: List[CompanyData]) -> List[Path]:
    directory = config.out / 'analytics'
    written = []
    for data in companies:
        for source, daily in data.analytics.items():
            text = analytics_to_frame(daily).to_csv(index=False, float_format='%.17g', lineterminator='\n')
            written.append(write_output(directory / f'{data.company}_{source}.csv', text))
        finance = data.finance.to_frame().to_csv(
            index=False, float_format='%.17g', date_format='%Y-%m-%d', lineterminator='\n'
        )
        written.append(write_output(directory / f'{data.company}_finance.csv', finance))

    summary = pd.DataFrame(
        [(d.company, d.summary.total_news, d.summary.relevant_news, d.summary.tweets) for d in companies],
        columns=['company', 'total_news', 'relevant_news', 'tweets'],
    )
    written.append(write_output(directory / 'summary.csv', summary.to_csv(index=False, lineterminator='\n')))
    return written


def summary_table(companies: List[CompanyData]) -> str:
    rows = [
        [d.company, str(d.summary.total_news), str(d.summary.relevant_news), str(d.summary.tweets)]
        for d in companies
    ]
    return format_table(['Company', 'News', 'Relevant news', 'Tweets'], rows)


def run_granger(config: RunConfig, companies: List[CompanyData]) -> List[GrangerResult]:
    results = []
    for source in config.sources:
        frames = source_frames(companies, source)
        for _, pairs in TARGET_PAIRS:
            results.extend(run_battery(frames, pairs, config.lag, source=source, workers=config.workers))
    return results


def write_granger(config: RunConfig, results: List[GrangerResult]) -> List[Path]:
    directory = config.out / 'granger'
    written = [write_output(directory / 'results.csv', format_results_csv(results))]
    for source in config.sources:
        for target, _ in TARGET_PAIRS:
            selected = [r for r in results if r.source == source and involves(r, target)]
            graph = build_graph(selected, config.alpha)
            written.append(write_output(directory / f'{source}_{target}.dot', emit_dot(graph)))
            logger.info(f"{source} {target}: {len(graph.edges)} significant edges at alpha={config.alpha}")
    return written


def run_predict(config: RunConfig, companies: List[CompanyData]) -> List[ModelComparison]:
    comparisons = []
    for source in config.sources:
        comparisons.extend(compare_models(source_frames(companies, source), source, config.mode, config.workers))
    for (source, target), mean in summarize_improvements(comparisons).items():
        logger.info(f"{source} {target}: mean improvement {mean:.2f}%")
    return comparisons


def write_predict(config: RunConfig, comparisons: List[ModelComparison]) -> List[Path]:
    directory = config.out / 'predict'
    table = comparisons_to_frame(comparisons).to_csv(index=False, lineterminator='\n')
    coefficients = coefficients_to_frame(comparisons).to_csv(index=False, lineterminator='\n')
    return [
        write_output(directory / 'comparisons.csv', table),
        write_output(directory / 'coefficients.csv', coefficients),
        write_output(directory / 'report.txt', comparison_report(comparisons)),
    ]


def _report_written(written: List[Path]):
    logger.info(f"Wrote {len(written)} files")
    for path in written:
        click.echo(str(path))


# =============================================================================
# Commands
# =============================================================================

@cli.command()
@input_options
def analytics(**options):
    """Write per-company sentiment and financial series."""
    config, companies = _prepare(options)
    _report_written(write_analytics(config, companies))


@cli.command()
@input_options
@lag_option
@alpha_option
def granger(lag, alpha, **options):
    """Run the Granger battery and write results.csv plus one DOT graph per source and target."""
    config, companies = _prepare(dict(options, lag=lag, alpha=alpha))
    _report_written(write_granger(config, run_granger(config, companies)))


@cli.command()
@input_options
@mode_option
def predict(mode, **options):
    """Compare market-only and sentiment-augmented models."""
    config, companies = _prepare(dict(options, mode=mode))
    _report_written(write_predict(config, run_predict(config, companies)))


@cli.command()
@input_options
@lag_option
@alpha_option
@mode_option
def report(lag, alpha, mode, **options):
    """Write report.txt with the summary, p-value tables and prediction report."""
    config, companies = _prepare(dict(options, lag=lag, alpha=alpha, mode=mode))
    results = run_granger(config, companies)
    comparisons = run_predict(config, companies)

    sections = [f'Company summary (relevance >= {config.relevance})\n' + summary_table(companies)]
    for target, _ in TARGET_PAIRS:
        sections.append(f'Granger causality p-values, {target} (k={config.lag})\n' + pvalue_table(results, target))
    sections.append(f'Prediction ({config.mode})\n' + comparison_report(comparisons))
    _report_written([write_output(config.out / 'report.txt', '\n'.join(sections))])


@cli.command()
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=0, envvar=env_var('seed'), show_default=True)
@click.option('--length', type=int, default=200, envvar=env_var('length'), show_default=True,
              help='Trading days.')
@click.option('--coupling', type=float, default=0.8, envvar=env_var('coupling'), show_default=True)
@click.option('--direction', type=click.Choice(DIRECTIONS), default=SENTIMENT_TO_FINANCE,
              envvar=env_var('direction'), show_default=True)
@click.option('--noise-sd', type=float, default=1.0, envvar=env_var('noise_sd'), show_default=True)
@click.option('--target', type=click.Choice(TARGETS), default='ER', envvar=env_var('target'), show_default=True)
@click.option('--companies', default='SYN.N', envvar=env_var('companies'), show_default=True)
@click.option('--out', type=_out_dir, default=DEFAULT_OUT, envvar=env_var('out'), show_default=True)
def synth(seed, length, coupling, direction, noise_sd, target, companies, out):
    """Write a seeded synthetic fixture (news, twitter, index and market files)."""
    spec = SyntheticSpec(
        seed=seed,
        length=length,
        coupling=coupling,
        direction=direction,
        noise_sd=noise_sd,
        target=target,
        companies=tuple(parse_symbol_list(companies)),
    )
    _report_written(write_fixture(generate(spec), out))


def main():
    cli()


if __name__ == "__main__":
    main()
