"""Operation-count model: hand-evaluated values, crossovers, CSV output."""

import numpy as np
import pytest

from otfs_rc.complexity import (
    COMPLEXITY_SCHEMA,
    METHODS,
    PHASES,
    ComplexityParams,
    complexity_table,
    count,
    crossover_report,
    write_complexity_csv,
)

# published-configuration params: M=1024, N=14, eta=0.046875 so that
# MN=14336, training pool eta*MN=672, extended state 56+6=62, P~=336
P = ComplexityParams()


class TestParams:
    def test_defaults(self):
        assert P.m == 1024 and P.n == 14
        assert P.eta * P.m * P.n == 672
        assert P.p_taps == 336.0

    def test_virtual_taps_override(self):
        p = ComplexityParams(virtual_taps=100.0)
        assert p.p_taps == 100.0

    def test_validation(self):
        with pytest.raises(ValueError):
            ComplexityParams(m=0)
        with pytest.raises(ValueError):
            ComplexityParams(eta=0.0)
        with pytest.raises(ValueError):
            ComplexityParams(n_neurons=0)
        with pytest.raises(ValueError):
            ComplexityParams(virtual_taps=-1.0)


class TestHandEvaluatedCounts:
    """Every dominant term recomputed from scratch at the published config."""

    def test_detection_phase(self):
        assert count("lmmse", "test", P) == 14336.0**3  # 2_946_347_565_056
        assert count("mpa", "test", P) == 30 * 4 * 336 * 14336  # 578_027_520
        assert count("lsmr", "test", P) == 15 * 5 * 336 * 14336  # 361_267_200
        assert count("rc1d", "test", P) == 62 * 14336  # 888_832
        assert count("rc2d", "test", P) == 888_832
        want_low = 14336.0 * 336.0 * np.log2(14)
        assert abs(count("lmmse_low", "test", P) - want_low) < 1e-6

    def test_training_phase(self):
        for method in ("lmmse", "lmmse_low", "mpa", "lsmr"):
            assert count(method, "train", P) == 672.0
        # rc1d: 6*62*14336 + 62*(672^2/7 + 672)*12
        assert count("rc1d", "train", P) == 5_332_992 + 62 * 65_184 * 12
        assert count("rc1d", "train", P) == 53_829_888
        # rc2d: 6*(56+18)*14336 + 62*(672^2 + 672)*(2+2)
        assert count("rc2d", "train", P) == 6_365_184 + 62 * 452_256 * 4
        assert count("rc2d", "train", P) == 118_524_672

    def test_rc1d_branches_on_pool_per_reservoir(self):
        # when the extended state outgrows the per-reservoir pilot pool the
        # least-squares term switches from pool-squared to state-dominated
        small_pool = ComplexityParams(eta=0.01)  # pool 143.36, pool/V ~ 20.5 < 62
        pool = 0.01 * 14336
        want = 6 * 62 * 14336 + 62 * (62 * pool * 7 + pool) * 12
        assert abs(count("rc1d", "train", small_pool) - want) < 1e-6

    def test_validation(self):
        with pytest.raises(ValueError, match="method"):
            count("viterbi", "test", P)
        with pytest.raises(ValueError, match="phase"):
            count("lmmse", "deploy", P)


class TestCrossovers:
    def test_reservoir_beats_each_baseline_at_published_config(self):
        rep = crossover_report(P)
        assert rep.ext_size == 62.0
        assert rep.mpa_bound == 336 * 30 * 4
        assert rep.lsmr_bound == 336 * 15 * 5
        assert abs(rep.lmmse_low_bound - 336 * np.log2(14)) < 1e-9
        assert rep.beats_mpa and rep.beats_lsmr and rep.beats_lmmse_low
        assert not rep.rc1d_on_branch_boundary

    def test_crossover_flips_when_state_outgrows_the_bound(self):
        p = ComplexityParams(n_input=2000)
        rep = crossover_report(p)
        assert not rep.beats_lmmse_low
        assert rep.beats_mpa  # mpa bound is far larger

    def test_branch_boundary_flag(self):
        # ext == eta*M*N/V exactly: 62 == eta*14336/7 -> eta = 434/14336
        p = ComplexityParams(eta=434.0 / 14336.0)
        assert crossover_report(p).rc1d_on_branch_boundary


class TestTable:
    def test_rows_cover_all_methods_and_sizes(self):
        rows = complexity_table(P, m_values=[256, 1024])
        assert len(rows) == 2 * len(METHODS) * len(PHASES)
        for row in rows:
            assert row["method"] in METHODS and row["phase"] in PHASES
            assert row["m"] in (256, 1024)
            assert row["count"] > 0

    def test_detection_counts_grow_with_m(self):
        rows = complexity_table(P, m_values=[256, 1024])
        for method in METHODS:
            small, big = [
                r["count"] for r in rows
                if r["method"] == method and r["phase"] == "test"
            ]
            assert big > small

    def test_csv_written_deterministically(self, tmp_path):
        rows = complexity_table(P, m_values=[512])
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_complexity_csv(rows, a)
        write_complexity_csv(rows, b)
        assert a.read_bytes() == b.read_bytes()
        first = a.read_text().splitlines()[0]
        assert first == f"# schema: {COMPLEXITY_SCHEMA}"
