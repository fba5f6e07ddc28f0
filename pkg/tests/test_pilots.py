"""Pilot patterns, frame assembly and data extraction."""

import numpy as np
import pytest

from otfs_rc.modem import OtfsConfig, bits_per_symbol, constellation, qam_map
from otfs_rc.numerics import vec
from otfs_rc.pilots import (
    assemble_frame,
    blockwise_mask,
    extract_data_bits,
    extract_data_symbols,
    papr,
    spike_mask,
)


class TestMasks:
    def test_blockwise_rows_centred(self):
        cfg = OtfsConfig(m=16, n=8)
        pat = blockwise_mask(cfg, n_pilot_rows=6)
        start = (16 - 6) // 2
        want = np.zeros((16, 8), dtype=bool)
        want[start:start + 6, :] = True
        np.testing.assert_array_equal(pat.mask, want)
        assert pat.kind == "blockwise"
        assert pat.n_pilot_rows == 6
        assert pat.num_data == (16 - 6) * 8
        assert abs(pat.overhead - 6 / 16) < 1e-12

    def test_blockwise_validates_rows(self):
        cfg = OtfsConfig(m=16, n=8)
        with pytest.raises(ValueError):
            blockwise_mask(cfg, 0)
        with pytest.raises(ValueError):
            blockwise_mask(cfg, 17)
        assert blockwise_mask(cfg, 16).num_data == 0

    def test_spike_pattern_geometry(self):
        cfg = OtfsConfig(m=16, n=8)
        pat = spike_mask(cfg, n_pilot_rows=6, spike_power_db=15.0)
        start = (16 - 6) // 2
        assert pat.kind == "spike"
        assert pat.spike_pos == (start + 3, 4)
        assert pat.spike_power_db == 15.0
        assert pat.mask[pat.spike_pos]
        # guard region is the same row block as the blockwise pattern
        np.testing.assert_array_equal(pat.mask, blockwise_mask(cfg, 6).mask)


class TestAssembleFrame:
    def test_data_symbols_in_vec_order(self):
        cfg = OtfsConfig(m=8, n=4)
        pat = blockwise_mask(cfg, 2)
        rng = np.random.default_rng(81)
        bits = rng.integers(0, 2, pat.num_data * bits_per_symbol(cfg.modulation))
        plan = assemble_frame(bits, pat, cfg, seed=3)
        np.testing.assert_allclose(
            extract_data_symbols(plan.x_grid, pat),
            qam_map(bits, cfg.modulation),
            atol=1e-12,
        )
        np.testing.assert_array_equal(
            extract_data_bits(plan.x_grid, pat, cfg.modulation), bits
        )

    def test_blockwise_pilots_are_constellation_points(self):
        cfg = OtfsConfig(m=8, n=4)
        pat = blockwise_mask(cfg, 3)
        bits = np.zeros(pat.num_data * 2, dtype=np.uint8)
        plan = assemble_frame(bits, pat, cfg, seed=9)
        points = constellation(cfg.modulation)
        pilot_vals = plan.x_pilot[pat.mask]
        for v in pilot_vals:
            assert np.min(np.abs(points - v)) < 1e-12
        # pilots appear identically in the composite grid
        np.testing.assert_allclose(plan.x_grid[pat.mask], pilot_vals, atol=1e-12)

    def test_spike_pilot_amplitude(self):
        cfg = OtfsConfig(m=8, n=4)
        pat = spike_mask(cfg, 3, spike_power_db=20.0)
        bits = np.zeros(pat.num_data * 2, dtype=np.uint8)
        plan = assemble_frame(bits, pat, cfg, seed=0)
        nz = np.nonzero(plan.x_pilot)
        assert len(nz[0]) == 1
        assert (nz[0][0], nz[1][0]) == pat.spike_pos
        assert abs(plan.x_pilot[pat.spike_pos] - 10.0) < 1e-12

    def test_same_seed_reproduces_pilots(self):
        cfg = OtfsConfig(m=8, n=4)
        pat = blockwise_mask(cfg, 3)
        bits = np.zeros(pat.num_data * 2, dtype=np.uint8)
        a = assemble_frame(bits, pat, cfg, seed=7)
        b = assemble_frame(bits, pat, cfg, seed=7)
        c = assemble_frame(bits, pat, cfg, seed=8)
        np.testing.assert_array_equal(a.x_grid, b.x_grid)
        assert np.any(a.x_pilot != c.x_pilot)

    def test_validates_bit_count_and_mask(self):
        cfg = OtfsConfig(m=8, n=4)
        pat = blockwise_mask(cfg, 2)
        with pytest.raises(ValueError, match="data bits"):
            assemble_frame(np.zeros(3, dtype=np.uint8), pat, cfg, seed=0)
        other = blockwise_mask(OtfsConfig(m=16, n=4), 2)
        bits = np.zeros(other.num_data * 2, dtype=np.uint8)
        with pytest.raises(ValueError, match="mask"):
            assemble_frame(bits, other, cfg, seed=0)


class TestPapr:
    def test_constant_envelope(self):
        assert abs(papr(np.ones(32, dtype=complex))) < 1e-12

    def test_known_two_sample_value(self):
        # peak 1, mean 1/2 -> 10*log10(2)
        val = papr(np.array([1.0, 0.0], dtype=complex))
        assert abs(val - 10 * np.log10(2.0)) < 1e-12

    def test_validates_input(self):
        with pytest.raises(ValueError):
            papr(np.zeros(0, dtype=complex))
        with pytest.raises(ValueError):
            papr(np.zeros(8, dtype=complex))
