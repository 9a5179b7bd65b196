"""Pilot layouts, superposition, and PAPR measurement."""

import numpy as np
import pytest

from crosspilot import (CrossPilots, MultiPilots, build_tx_frame,
                        cross_pilot_matrix, idzt, multi_pilot_matrix, papr_db,
                        solve_energy, uniform_pilot_grid, vec)


class TestCrossPilotMatrix:
    def test_pilot_count(self, cfg):
        xp = cross_pilot_matrix(32, 8, cfg.M, cfg.N)
        assert xp.sum() == cfg.M + cfg.N - 1 == 79

    def test_vec_form(self, cfg):
        # vec equals (1_N kron e_mp) + e_np kron (1_M - e_mp)
        m_p, n_p = 32, 8
        e_m = np.zeros(cfg.M); e_m[m_p] = 1.0
        e_n = np.zeros(cfg.N); e_n[n_p] = 1.0
        expected = np.kron(np.ones(cfg.N), e_m) + np.kron(e_n, np.ones(cfg.M) - e_m)
        assert np.array_equal(vec(cross_pilot_matrix(m_p, n_p, cfg.M, cfg.N)),
                              expected)

    def test_row_and_column_membership(self, cfg):
        xp = cross_pilot_matrix(10, 3, cfg.M, cfg.N)
        assert np.all(xp[10, :] == 1)
        off_row = np.delete(xp[9, :], 3)
        assert np.all(off_row == 0)

    def test_transpose_symmetry(self, cfg):
        xp = cross_pilot_matrix(10, 3, cfg.M, cfg.N)
        swapped = cross_pilot_matrix(3, 10, cfg.N, cfg.M)
        assert np.array_equal(xp.T, swapped)

    def test_out_of_range_rejected(self, cfg):
        with pytest.raises(ValueError):
            cross_pilot_matrix(cfg.M, 0, cfg.M, cfg.N)

    def test_default_position_is_center(self, cfg):
        xp = CrossPilots().matrix(cfg)
        assert np.all(xp[cfg.M // 2, :] == 1)
        assert np.all(xp[:, cfg.N // 2] == 1)


class TestMultiPilotMatrix:
    def test_uniform_grid_stride(self, cfg):
        positions = uniform_pilot_grid(cfg.M, cfg.N, 4, 4)
        assert len(positions) == 16
        ms = sorted({m for m, _ in positions})
        ns = sorted({n for _, n in positions})
        assert np.all(np.diff(ms) == 16)
        assert np.all(np.diff(ns) == 4)
        assert multi_pilot_matrix(positions, cfg.M, cfg.N).sum() == 16

    def test_empty_positions(self, cfg):
        assert np.all(multi_pilot_matrix((), cfg.M, cfg.N) == 0)

    def test_single_position_vec(self, cfg):
        m, n = 5, 2
        e_m = np.zeros(cfg.M); e_m[m] = 1.0
        e_n = np.zeros(cfg.N); e_n[n] = 1.0
        xp = multi_pilot_matrix([(m, n)], cfg.M, cfg.N)
        assert np.array_equal(vec(xp), np.kron(e_n, e_m))

    def test_duplicates_rejected(self, cfg):
        with pytest.raises(ValueError, match="duplicate"):
            multi_pilot_matrix([(1, 1), (1, 1)], cfg.M, cfg.N)


class TestBuildTxFrame:
    def test_zero_pilot_energy(self, cfg, rng):
        alloc = solve_energy(0.0, float("-inf"), cfg.M, cfg.N, 79)
        bits = rng.integers(0, 2, cfg.n_cells * 2)
        tx = build_tx_frame(bits, CrossPilots(), alloc, 4, cfg)
        assert np.allclose(tx.X, np.sqrt(alloc.es) * tx.Xd)

    def test_pilot_only_papr_deterministic(self, cfg, rng):
        # Es = 0 removes the data, so PAPR depends only on the pilot position
        alloc = solve_energy(0.0, 0.0, cfg.M, cfg.N, 79)
        alloc = type(alloc)(es=0.0, ep=alloc.ep, pdr=alloc.pdr,
                            ef=79 * alloc.ep, snr=alloc.snr)
        vals = []
        for _ in range(2):
            bits = rng.integers(0, 2, cfg.n_cells * 2)
            tx = build_tx_frame(bits, CrossPilots(), alloc, 4, cfg)
            vals.append(papr_db(idzt(tx.X, cfg)))
        assert vals[0] == pytest.approx(vals[1], abs=1e-12)

    def test_superposition_identity(self, cfg, rng):
        alloc = solve_energy(2.0, -5.0, cfg.M, cfg.N, 79)
        bits = rng.integers(0, 2, cfg.n_cells * 2)
        tx = build_tx_frame(bits, CrossPilots(), alloc, 4, cfg)
        assert np.array_equal(
            tx.X, np.sqrt(alloc.es) * tx.Xd + np.sqrt(alloc.ep) * tx.Xp)

    def test_qpsk_constellation(self, cfg, rng):
        alloc = solve_energy(0.0, -5.0, cfg.M, cfg.N, 79)
        bits = rng.integers(0, 2, cfg.n_cells * 2)
        tx = build_tx_frame(bits, CrossPilots(), alloc, 4, cfg)
        pts = np.unique(np.round(vec(tx.Xd) * np.sqrt(2), 9))
        assert set(pts) <= {(1 + 1j), (1 - 1j), (-1 + 1j), (-1 - 1j)}
        assert np.mean(np.abs(tx.Xd) ** 2) == pytest.approx(1.0)

    def test_bit_length_mismatch(self, cfg, rng):
        alloc = solve_energy(0.0, -5.0, cfg.M, cfg.N, 79)
        with pytest.raises(ValueError, match="bits"):
            build_tx_frame(rng.integers(0, 2, 17), CrossPilots(), alloc, 4, cfg)

    def test_frame_energy_matches_allocation(self, cfg):
        alloc = solve_energy(-2.0, -5.0, cfg.M, cfg.N, 79)
        total = 0.0
        n = 400
        g = np.random.default_rng(99)
        for _ in range(n):
            bits = g.integers(0, 2, cfg.n_cells * 2)
            tx = build_tx_frame(bits, CrossPilots(), alloc, 4, cfg)
            total += np.sum(np.abs(tx.X) ** 2)
        assert total / n == pytest.approx(alloc.ef, rel=0.01)


class TestPapr:
    def test_constant_modulus(self):
        assert papr_db(np.exp(1j * np.linspace(0, 5, 1024))) == pytest.approx(0.0)

    def test_single_spike(self):
        s = np.zeros(1024, complex)
        s[100] = 2.0
        assert papr_db(s) == pytest.approx(10 * np.log10(1024))

    def test_zero_signal_rejected(self):
        with pytest.raises(ValueError):
            papr_db(np.zeros(64, complex))

    def test_oversampling_never_reduces_peak(self, cfg, rng):
        alloc = solve_energy(0.0, -5.0, cfg.M, cfg.N, 79)
        bits = rng.integers(0, 2, cfg.n_cells * 2)
        s = idzt(build_tx_frame(bits, CrossPilots(), alloc, 4, cfg).X, cfg)
        assert papr_db(s, oversampling=4) >= papr_db(s) - 1e-9

    def test_regression_mean_papr(self, cfg):
        # frozen Monte Carlo baseline: 4-QAM cross frame, per-symbol PDR -5 dB,
        # 1000 frames on a pinned stream
        alloc = solve_energy(0.0, -5.0, cfg.M, cfg.N, 79)
        g = np.random.default_rng(314159)
        vals = []
        for _ in range(1000):
            bits = g.integers(0, 2, cfg.n_cells * 2)
            tx = build_tx_frame(bits, CrossPilots(), alloc, 4, cfg)
            vals.append(papr_db(idzt(tx.X, cfg)))
        assert np.mean(vals) == pytest.approx(8.782949, abs=1e-3)
