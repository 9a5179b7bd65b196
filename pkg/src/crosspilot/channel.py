"""Doubly-dispersive multipath channel simulation for a ULA receiver.

Generates per-path (gain, fractional delay, fractional Doppler, DoA)
realizations and the MN x N_r spatial observation matrix with calibrated
AWGN.  All randomness flows through an explicit numpy Generator so frames
can be simulated on independent substreams.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dd_core import SPEED_OF_LIGHT, FrameConfig, apply_path_operator


@dataclass(frozen=True)
class ChannelProfile:
    """Static multipath profile: delays, average powers, DoAs, mobility.

    doppler_mode "random-cosine" draws nu_p = fc*(v_max/c)*cos(phi_p) with
    phi_p uniform on [0, 2pi); "fixed" uses nu_fixed_hz as given.
    gain_mode "rayleigh" draws alpha_p ~ CN(0, P_p) with the average powers
    normalized to sum to 1; "fixed-magnitude" keeps |alpha_p| = sqrt(P_p)
    deterministic with a uniform random phase.
    """

    tau_s: tuple[float, ...]
    power_db: tuple[float, ...]
    doa_deg: tuple[float, ...]
    v_max_mps: float = 0.0
    doppler_mode: str = "random-cosine"
    nu_fixed_hz: tuple[float, ...] = ()
    gain_mode: str = "rayleigh"
    min_doa_sep_deg: float = 5.0

    def __post_init__(self):
        if len(self.tau_s) < 1:
            raise ValueError("profile needs at least one path")
        if not (len(self.tau_s) == len(self.power_db) == len(self.doa_deg)):
            raise ValueError("tau_s, power_db and doa_deg must have equal length")
        if any(t < 0 for t in self.tau_s):
            raise ValueError("path delays must be non-negative")
        if any(abs(d) >= 90 for d in self.doa_deg):
            raise ValueError("DoAs must satisfy |doa| < 90 degrees")
        if self.doppler_mode not in ("random-cosine", "fixed"):
            raise ValueError(f"unknown doppler_mode {self.doppler_mode!r}")
        if self.doppler_mode == "fixed" and len(self.nu_fixed_hz) != len(self.tau_s):
            raise ValueError("fixed doppler_mode needs one nu_fixed_hz per path")
        if self.gain_mode not in ("rayleigh", "fixed-magnitude"):
            raise ValueError(f"unknown gain_mode {self.gain_mode!r}")
        doas = sorted(self.doa_deg)
        sep = min((b - a for a, b in zip(doas, doas[1:])), default=np.inf)
        if sep < self.min_doa_sep_deg:
            warnings.warn(
                f"minimum DoA separation {sep:.1f} deg is below "
                f"{self.min_doa_sep_deg:.1f} deg; angular separability is weak",
                stacklevel=2,
            )

    @property
    def n_paths(self) -> int:
        return len(self.tau_s)

    @property
    def powers_normalized(self) -> np.ndarray:
        p = 10.0 ** (np.asarray(self.power_db) / 10.0)
        return p / p.sum()


@dataclass(frozen=True)
class PathParams:
    alpha: complex
    l: float          # delay in bins, tau/delta_tau
    k: float          # Doppler in bins, nu/delta_nu
    theta: float      # DoA in radians


@dataclass(frozen=True)
class ChannelRealization:
    paths: tuple[PathParams, ...]

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def doas(self) -> np.ndarray:
        return np.array([p.theta for p in self.paths])


@dataclass(frozen=True)
class SpatialObservation:
    """Received MN x N_r sample matrix and the per-entry noise variance."""

    R: np.ndarray
    sigma2: float

    @property
    def n_rx(self) -> int:
        return self.R.shape[1]


@dataclass(frozen=True)
class EnergyAllocation:
    """Data/pilot energy split at a fixed total frame energy."""

    es: float
    ep: float
    pdr: float   # Ep/Es, linear
    ef: float    # MN*Es + N_p*Ep
    snr: float   # Ef/(MN*sigma2), linear


def steering_vector(theta: float, n_rx: int) -> np.ndarray:
    """ULA response at half-wavelength spacing: entry i = exp(j*pi*i*sin(theta))."""
    if not abs(theta) < np.pi / 2:
        raise ValueError("DoA must satisfy |theta| < pi/2")
    return np.exp(1j * np.pi * np.arange(n_rx) * np.sin(theta))


def solve_energy(snr_db: float, pdr_db: float, M: int, N: int, n_pilots: int,
                 sigma2: float = 1.0) -> EnergyAllocation:
    """Solve the (Es, Ep) split for target SNR and PDR at fixed frame energy.

    SNR = Ef/(MN*sigma2) with Ef = MN*Es + N_p*Ep and PDR = Ep/Es, so
    Es = snr*MN*sigma2 / (MN + N_p*pdr).  pdr_db = -inf yields Ep = 0.
    """
    snr = 10.0 ** (snr_db / 10.0)
    pdr = 10.0 ** (pdr_db / 10.0)
    es = snr * M * N * sigma2 / (M * N + n_pilots * pdr)
    ep = pdr * es
    return EnergyAllocation(es=es, ep=ep, pdr=pdr,
                            ef=M * N * es + n_pilots * ep, snr=snr)


def draw_channel(profile: ChannelProfile, cfg: FrameConfig,
                 rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization; (l, k) are exact tau*B and nu*N*T'."""
    tau = np.asarray(profile.tau_s, dtype=float)
    cp_bound = cfg.cp_samples * cfg.delta_tau
    if tau.max() >= cp_bound:
        raise ValueError(
            f"max path delay {tau.max():.3e}s must stay below the CP duration "
            f"{cp_bound:.3e}s")

    powers = profile.powers_normalized
    if profile.gain_mode == "rayleigh":
        alphas = (rng.standard_normal(profile.n_paths)
                  + 1j * rng.standard_normal(profile.n_paths)) * np.sqrt(powers / 2)
    else:  # fixed-magnitude
        phases = rng.uniform(0.0, 2 * np.pi, profile.n_paths)
        alphas = np.sqrt(powers) * np.exp(1j * phases)

    if profile.doppler_mode == "random-cosine":
        nu_max = cfg.fc * profile.v_max_mps / SPEED_OF_LIGHT
        phi = rng.uniform(0.0, 2 * np.pi, profile.n_paths)
        nus = nu_max * np.cos(phi)
    else:
        nus = np.asarray(profile.nu_fixed_hz, dtype=float)

    ls = tau / cfg.delta_tau
    ks = nus / cfg.delta_nu
    thetas = np.deg2rad(profile.doa_deg)
    return ChannelRealization(paths=tuple(
        PathParams(alpha=complex(a), l=float(l), k=float(k), theta=float(t))
        for a, l, k, t in zip(alphas, ls, ks, thetas)))


def complex_noise(shape: tuple[int, ...], sigma2: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian with per-entry variance sigma2."""
    return np.sqrt(sigma2 / 2) * (rng.standard_normal(shape)
                                  + 1j * rng.standard_normal(shape))


def observe(samples: np.ndarray, ch: ChannelRealization, cfg: FrameConfig,
            n_rx: int, sigma2: float, rng: np.random.Generator | None = None,
            noise: np.ndarray | None = None) -> SpatialObservation:
    """Propagate a time-domain frame through the channel onto the array.

    R = sum_p alpha_p * op(s; l_p, k_p) outer a_rx(theta_p) + noise.  A
    pre-drawn noise matrix may be supplied so several schemes can share one
    noise realization; otherwise it is drawn from rng.
    """
    samples = np.asarray(samples)
    if samples.size != cfg.n_cells:
        raise ValueError("sample vector does not match the frame geometry")
    if noise is None:
        if sigma2 > 0:
            if rng is None:
                raise ValueError("need an rng (or a noise matrix) when sigma2 > 0")
            noise = complex_noise((samples.size, n_rx), sigma2, rng)
        else:
            noise = np.zeros((samples.size, n_rx), dtype=complex)
    R = noise.astype(complex, copy=True)
    for p in ch.paths:
        faded = p.alpha * apply_path_operator(samples, p.l, p.k, cfg)
        R += np.outer(faded, steering_vector(p.theta, n_rx))
    return SpatialObservation(R=R, sigma2=sigma2)
