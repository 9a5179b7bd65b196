"""Channel realization, steering vectors, energy split, observation model."""

import numpy as np
import pytest

from crosspilot import (ChannelProfile, FrameConfig, apply_path_operator,
                        draw_channel, observe, solve_energy, steering_vector)
from crosspilot.channel import ChannelRealization, PathParams, complex_noise


class TestSteeringVector:
    def test_broadside_all_ones(self):
        assert np.allclose(steering_vector(0.0, 16), 1.0)

    def test_30deg_period_four(self):
        # sin(30 deg) = 1/2 so the phase steps by pi/2 per element
        a = steering_vector(np.deg2rad(30), 8)
        assert np.allclose(a, np.exp(1j * np.pi * np.arange(8) / 2))

    def test_approximate_orthogonality(self):
        a1 = steering_vector(np.deg2rad(10), 32)
        a2 = steering_vector(np.deg2rad(42), 32)
        assert abs(np.vdot(a1, a2)) / 32 <= 0.2

    def test_endfire_rejected(self):
        with pytest.raises(ValueError):
            steering_vector(np.pi / 2, 8)


class TestSolveEnergy:
    def test_reference_point(self):
        alloc = solve_energy(-2.0, -5.0, 64, 16, 79, sigma2=1.0)
        assert alloc.es == pytest.approx(0.6159, abs=2e-4)
        assert alloc.ep == pytest.approx(0.1948, abs=2e-4)
        # back-substitution into the SNR identity
        assert alloc.ef / (64 * 16 * 1.0) == pytest.approx(10 ** (-0.2), rel=1e-12)
        assert alloc.ep / alloc.es == pytest.approx(10 ** (-0.5), rel=1e-12)

    def test_zero_pilot_limit(self):
        alloc = solve_energy(3.0, float("-inf"), 64, 16, 79, sigma2=2.0)
        assert alloc.ep == 0.0
        assert alloc.es == pytest.approx(10 ** 0.3 * 2.0)

    def test_no_pilot_cells(self):
        alloc = solve_energy(0.0, -5.0, 64, 16, 0, sigma2=1.0)
        assert alloc.es == pytest.approx(1.0)
        assert alloc.ep == pytest.approx(10 ** (-0.5))
        assert alloc.ef == pytest.approx(64 * 16)


@pytest.fixture(scope="module")
def profile():
    return ChannelProfile(
        tau_s=(0.0, 0.9e-6, 2.4e-6, 3.0e-6),
        power_db=(0.0, -1.0, -5.0, -7.0),
        doa_deg=(10.0, 42.0, -25.0, 24.0),
        v_max_mps=500.0 / 3.6,
    )


class TestDrawChannel:
    def test_delay_bins_exact(self, profile, cfg, rng):
        ch = draw_channel(profile, cfg, rng)
        ls = [p.l for p in ch.paths]
        assert ls == pytest.approx([0.0, 1.728, 4.608, 5.76], abs=1e-9)
        # l*delta_tau recovers tau exactly
        for p, tau in zip(ch.paths, profile.tau_s):
            assert p.l * cfg.delta_tau == pytest.approx(tau, abs=1e-18)

    def test_doppler_bound_high_mobility(self, profile, cfg):
        # worst case nu = fc*v/c ~ 2.73 kHz -> |k| stays below ~1.83 bins
        nu_max = cfg.fc * profile.v_max_mps / 299_792_458.0
        assert nu_max == pytest.approx(2733, abs=5)
        ks = []
        for seed in range(50):
            ch = draw_channel(profile, cfg, np.random.default_rng(seed))
            ks.extend(abs(p.k) for p in ch.paths)
        assert max(ks) <= nu_max * cfg.N * cfg.T_prime + 1e-9
        assert max(ks) <= 1.83

    def test_fixed_doppler_mode(self, cfg, rng):
        prof = ChannelProfile(tau_s=(0.0, 1e-6), power_db=(0.0, -3.0),
                              doa_deg=(-20.0, 35.0), doppler_mode="fixed",
                              nu_fixed_hz=(0.0, 0.0))
        ch = draw_channel(prof, cfg, rng)
        assert all(p.k == 0.0 for p in ch.paths)

    def test_delay_exceeding_cp_rejected(self, rng):
        cfg = FrameConfig(M=64, N=16, delta_f=30e3, cp_samples=2)
        prof = ChannelProfile(tau_s=(0.0, 3e-6), power_db=(0.0, -1.0),
                              doa_deg=(0.0, 30.0))
        with pytest.raises(ValueError, match="CP"):
            draw_channel(prof, cfg, rng)

    def test_close_doas_warn(self):
        with pytest.warns(UserWarning, match="separation"):
            ChannelProfile(tau_s=(0.0, 1e-6), power_db=(0.0, 0.0),
                           doa_deg=(10.0, 12.0))

    def test_rayleigh_power_normalization(self, profile, cfg):
        total = 0.0
        n = 4000
        for seed in range(n):
            ch = draw_channel(profile, cfg, np.random.default_rng(seed))
            total += sum(abs(p.alpha) ** 2 for p in ch.paths)
        assert total / n == pytest.approx(1.0, rel=0.05)

    def test_fixed_magnitude_mode(self, cfg, rng):
        prof = ChannelProfile(tau_s=(0.0, 1e-6), power_db=(0.0, -3.0),
                              doa_deg=(0.0, 30.0), gain_mode="fixed-magnitude")
        ch = draw_channel(prof, cfg, rng)
        assert sum(abs(p.alpha) ** 2 for p in ch.paths) == pytest.approx(1.0)


class TestObserve:
    def test_noise_only_variance(self, cfg, rng):
        ch = ChannelRealization(paths=(PathParams(0.0, 0.0, 0.0, 0.1),))
        samples = []
        while len(samples) * cfg.n_cells * 4 < 1e5:
            obs = observe(np.zeros(cfg.n_cells, complex), ch, cfg, 4, 0.7, rng)
            samples.append(np.abs(obs.R) ** 2)
        var = np.mean(np.concatenate([s.ravel() for s in samples]))
        assert var == pytest.approx(0.7, rel=0.05)

    def test_single_path_rank_one(self, cfg, rng):
        s = rng.standard_normal(cfg.n_cells) + 1j * rng.standard_normal(cfg.n_cells)
        ch = ChannelRealization(paths=(PathParams(0.8 - 0.1j, 1.7, -0.9, 0.4),))
        obs = observe(s, ch, cfg, 8, 0.0)
        assert np.linalg.matrix_rank(obs.R, tol=1e-9) == 1
        ref = apply_path_operator(s, 1.7, -0.9, cfg)
        for col in range(1, 8):
            ratio = obs.R[:, col] / obs.R[:, 0]
            assert np.allclose(ratio, ratio[0])
        # beamforming recovers alpha * op(s) exactly (a^H a = N_r)
        a = steering_vector(0.4, 8)
        assert np.allclose(obs.R @ np.conj(a) / 8, (0.8 - 0.1j) * ref)

    def test_linearity(self, cfg, rng):
        s1 = rng.standard_normal(cfg.n_cells) + 0j
        s2 = rng.standard_normal(cfg.n_cells) + 0j
        ch = ChannelRealization(paths=(
            PathParams(0.9, 1.728, 1.3, 0.2), PathParams(0.3j, 4.608, -0.7, -0.5)))
        lhs = observe(s1 + s2, ch, cfg, 4, 0.0).R
        rhs = observe(s1, ch, cfg, 4, 0.0).R + observe(s2, ch, cfg, 4, 0.0).R
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_shared_noise_matrix(self, cfg, rng):
        noise = complex_noise((cfg.n_cells, 4), 1.0, rng)
        ch = ChannelRealization(paths=(PathParams(0.0, 0.0, 0.0, 0.0),))
        obs = observe(np.zeros(cfg.n_cells, complex), ch, cfg, 4, 1.0, noise=noise)
        assert np.array_equal(obs.R, noise)
