"""
Tests for granger.py - pairwise causality tests, batteries and graphs.
"""

import numpy as np
import pandas as pd
import pytest

from granger import (
    ER_PAIRS,
    RESULT_COLUMNS,
    VOL_PAIRS,
    CausalityGraph,
    GrangerResult,
    build_graph,
    emit_dot,
    format_results_csv,
    granger_test,
    involves,
    pvalue_table,
    run_battery,
)
from pipeline import FRAME_COLUMNS
from statcore import FTestResult
from synthgen import NO_COUPLING, SyntheticSpec
from timeseries import AlignedFrame
from utils import (
    DegenerateDataError,
    InsufficientDataError,
    ModelSpecificationError,
    RankDeficiencyError,
)


def result(cause, effect, company, p_value, source='twitter'):
    return GrangerResult(
        cause=cause,
        effect=effect,
        company=company,
        lag_order=1,
        f_test=FTestResult(f_stat=1.0, df_num=1, df_den=196, p_value=p_value),
        source=source,
    )


def random_frame(seed, n=60):
    rng = np.random.default_rng(seed)
    data = pd.DataFrame(
        {name: rng.normal(size=n) for name in FRAME_COLUMNS},
        index=pd.bdate_range("2014-01-06", periods=n),
    )
    return AlignedFrame(data)


def driven_pair(seed, n=200, effect=0.3):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    y = rng.normal(size=n)
    y[1:] += effect * x[:-1]
    return x, y


# SA -> ER significant for HD.N and MAT.N only
HAND_RESULTS = [
    result('SA', 'ER', 'HD.N', 0.003),
    result('SA', 'ER', 'MAT.N', 0.046),
    result('SA', 'ER', 'GME.N', 0.41),
    result('ER', 'SA', 'HD.N', 0.2),
    result('SR', 'ER', 'ANF.N', 0.07),
]


class TestGrangerTest:
    """Tests for granger_test function."""

    def test_result_fields(self):
        x, y = driven_pair(1)
        r = granger_test(x, y, k=2, cause='SR', effect='ER', company='HD.N', source='twitter')
        assert (r.cause, r.effect, r.company, r.source, r.lag_order) == ('SR', 'ER', 'HD.N', 'twitter', 2)
        assert r.f_test.df_num == 2
        assert r.f_test.df_den == 200 - 2 - 5
        assert 0 <= r.p_value <= 1

    def test_detects_driven_series(self):
        x, y = driven_pair(2, effect=0.5)
        assert granger_test(x, y).p_value < 0.01

    def test_identical_series(self):
        x, _ = driven_pair(3)
        with pytest.raises(RankDeficiencyError):
            granger_test(x, x.copy())

    def test_constant_series(self):
        _, y = driven_pair(4)
        with pytest.raises(DegenerateDataError):
            granger_test(np.ones(len(y)), y)

    def test_too_short(self):
        # n - k must exceed 2k + 1
        with pytest.raises(InsufficientDataError):
            granger_test([1.0, 2.0, 0.5, 3.0], [2.0, 1.0, 4.0, 0.0], k=1)
        with pytest.raises(InsufficientDataError):
            granger_test(np.arange(10.0), np.arange(10.0) ** 2, k=3)

    def test_zero_lag(self):
        x, y = driven_pair(5)
        with pytest.raises(ModelSpecificationError):
            granger_test(x, y, k=0)

    def test_length_mismatch(self):
        x, y = driven_pair(6)
        with pytest.raises(ModelSpecificationError):
            granger_test(x[1:], y)

    def test_same_names(self):
        x, y = driven_pair(7)
        with pytest.raises(ModelSpecificationError):
            granger_test(x, y, cause='ER', effect='ER')

    def test_dated_series(self):
        x, y = driven_pair(8)
        index = pd.bdate_range("2013-11-01", periods=len(x))
        dated = granger_test(pd.Series(x, index=index), pd.Series(y, index=index))
        assert dated.p_value == pytest.approx(granger_test(x, y).p_value, abs=1e-12)

    def test_affine_invariance(self):
        for seed in range(50):
            x, y = driven_pair(100 + seed, effect=0.15)
            raw = granger_test(x, y).p_value
            transformed = granger_test(3 * x - 7, 0.5 * y + 2).p_value
            assert transformed == pytest.approx(raw, abs=1e-9)

    def test_autoregressive_effect_with_driver(self):
        detected = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            x = rng.normal(size=200)
            noise = rng.normal(size=200)
            y = np.zeros(200)
            for t in range(1, 200):
                y[t] = 0.5 * y[t - 1] + 0.8 * x[t - 1] + noise[t]
            if granger_test(x, y).p_value < 0.01:
                detected += 1
        assert detected >= 95

    @pytest.mark.slow
    def test_size_on_independent_noise(self):
        rejections = 0
        for seed in range(2000):
            rng = np.random.default_rng(seed)
            x = rng.normal(size=200)
            y = rng.normal(size=200)
            if granger_test(x, y).p_value < 0.05:
                rejections += 1
        assert 0.03 <= rejections / 2000 <= 0.07

    @pytest.mark.slow
    def test_planted_sentiment_driver_recovered(self, build_synthetic_frame):
        detected = 0
        reverse = 0
        for seed in range(100):
            frame = build_synthetic_frame(SyntheticSpec(seed=seed, length=200, coupling=0.8))
            sr, er = frame.column('SR'), frame.column('ER')
            if granger_test(sr, er, cause='SR', effect='ER').p_value < 0.01:
                detected += 1
            if granger_test(er, sr, cause='ER', effect='SR').p_value < 0.05:
                reverse += 1
        assert detected >= 95
        assert reverse <= 10


class TestRunBattery:
    """Tests for run_battery function."""

    def test_return_battery_count(self):
        frames = {f'C{i}.N': random_frame(i) for i in range(5)}
        assert len(run_battery(frames, ER_PAIRS)) == 5 * 4 * 2

    def test_volatility_battery_count(self):
        frames = {f'C{i}.N': random_frame(i) for i in range(5)}
        assert len(run_battery(frames, VOL_PAIRS)) == 5 * 5 * 2

    def test_empty(self):
        assert run_battery({}, ER_PAIRS) == []

    def test_order(self):
        results = run_battery({'B.N': random_frame(1), 'A.N': random_frame(2)}, ER_PAIRS[:2], source='news')
        assert [(r.company, r.cause, r.effect) for r in results] == [
            ('B.N', 'SA', 'ER'), ('B.N', 'ER', 'SA'), ('B.N', 'SR', 'ER'), ('B.N', 'ER', 'SR'),
            ('A.N', 'SA', 'ER'), ('A.N', 'ER', 'SA'), ('A.N', 'SR', 'ER'), ('A.N', 'ER', 'SR'),
        ]
        assert {r.source for r in results} == {'news'}

    def test_workers_do_not_change_results(self):
        frames = {f'C{i}.N': random_frame(10 + i) for i in range(4)}
        serial = run_battery(frames, VOL_PAIRS, k=2, workers=1)
        parallel = run_battery(frames, VOL_PAIRS, k=2, workers=3)
        assert [(r.company, r.cause, r.effect, r.p_value) for r in serial] == [
            (r.company, r.cause, r.effect, r.p_value) for r in parallel
        ]

    def test_missing_column(self):
        frame = AlignedFrame(random_frame(1).data.drop(columns=['SR']))
        with pytest.raises(ModelSpecificationError):
            run_battery({'A.N': frame}, ER_PAIRS)

    def test_null_fixture_has_no_edges_at_tiny_alpha(self, build_synthetic_frame):
        spec = SyntheticSpec(seed=11, coupling=0.0, direction=NO_COUPLING, companies=('AAA.N', 'BBB.N'))
        frames = {company: build_synthetic_frame(spec, company=company) for company in spec.companies}
        results = run_battery(frames, ER_PAIRS) + run_battery(frames, VOL_PAIRS)
        assert build_graph(results, alpha=1e-9) == CausalityGraph()


class TestBuildGraph:
    """Tests for build_graph function."""

    def test_single_labelled_edge(self):
        graph = build_graph(HAND_RESULTS, alpha=0.05)
        assert graph.edges == frozenset({('SA', 'ER')})
        assert graph.edge_labels[('SA', 'ER')] == frozenset({'HD.N', 'MAT.N'})
        assert graph.nodes == frozenset({'SA', 'ER'})

    def test_labels_are_exactly_significant_companies(self):
        graph = build_graph(HAND_RESULTS, alpha=0.1)
        for (cause, effect), companies in graph.edge_labels.items():
            expected = {
                r.company for r in HAND_RESULTS if (r.cause, r.effect) == (cause, effect) and r.p_value < 0.1
            }
            assert companies == expected

    def test_alpha_monotone(self):
        previous = frozenset()
        for alpha in (0.0, 0.001, 0.01, 0.05, 0.1, 0.5, 1.0):
            edges = build_graph(HAND_RESULTS, alpha).edges
            assert previous <= edges
            previous = edges

    def test_zero_alpha_empty(self):
        assert build_graph(HAND_RESULTS, alpha=0.0) == CausalityGraph()

    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            build_graph(HAND_RESULTS, alpha=1.5)

    def test_self_loop_rejected(self):
        with pytest.raises(ModelSpecificationError):
            result('ER', 'ER', 'HD.N', 0.01)


class TestEmitDot:
    """Tests for emit_dot function."""

    def test_empty_graph(self):
        assert emit_dot(CausalityGraph()) == "digraph causality {\n}\n"

    def test_single_labelled_edge(self):
        assert emit_dot(build_graph(HAND_RESULTS)) == (
            "digraph causality {\n"
            "  ER;\n"
            "  SA;\n"
            '  SA -> ER [label="HD.N,MAT.N"];\n'
            "}\n"
        )

    def test_deterministic(self):
        forward = build_graph(HAND_RESULTS, alpha=0.1)
        backward = build_graph(list(reversed(HAND_RESULTS)), alpha=0.1)
        assert emit_dot(forward) == emit_dot(backward)

    def test_edges_sorted(self):
        graph = build_graph([result('SR', 'ER', 'A.N', 0.01), result('ER', 'B', 'A.N', 0.01)])
        lines = emit_dot(graph).splitlines()
        assert lines[1:4] == ["  B;", "  ER;", "  SR;"]
        assert lines[4].startswith("  ER -> B ")
        assert lines[5].startswith("  SR -> ER ")


class TestTables:
    """Tests for the CSV and p-value table output."""

    def test_results_csv(self):
        text = format_results_csv([result('SA', 'ER', 'HD.N', 0.003)])
        header, row = text.splitlines()
        assert header == ','.join(RESULT_COLUMNS)
        assert row == "twitter,HD.N,SA,ER,1,1,1,196,0.0030000000000000001,***"

    def test_involves(self):
        r = result('SA', 'ER', 'HD.N', 0.003)
        assert involves(r, 'ER')
        assert involves(r, 'SA')
        assert not involves(r, 'VOL')

    def test_pvalue_table(self):
        results = [
            result('SA', 'ER', 'HD.N', 0.003, source='news'),
            result('SA', 'ER', 'HD.N', 0.046),
            result('ER', 'SA', 'HD.N', 0.5),
            result('SA', 'VOL', 'HD.N', 0.001),
        ]
        lines = pvalue_table(results, 'ER').splitlines()
        assert lines[0].split('  ')[0] == 'ER'
        assert lines[0].index('TWITTER HD.N') < lines[0].index('NEWS HD.N')
        assert lines[1].split() == ['SA', '->', 'ER', '0.046**', '0.003***']
        assert lines[2].split() == ['ER', '->', 'SA', '0.500', '-']
        assert len(lines) == 3
