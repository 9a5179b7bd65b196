"""Pilot layouts and transmit-frame construction.

The cross layout superimposes pilots on one full delay column (m = m_p,
all n) and one full Doppler row (n = n_p, all m), M+N-1 cells total.  The
multiple-pilot comparator scatters isolated pilots on a uniform grid.
Data occupies every cell in both cases (true superposition, no guard
region): X = sqrt(Es)*Xd + sqrt(Ep)*Xp.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import EnergyAllocation
from .dd_core import FrameConfig, idzt
from .detector import qam_map


def cross_pilot_matrix(m_p: int, n_p: int, M: int, N: int) -> np.ndarray:
    """0/1 pilot frame with ones where m == m_p or n == n_p (M+N-1 ones)."""
    if not (0 <= m_p < M and 0 <= n_p < N):
        raise ValueError(f"pilot position ({m_p},{n_p}) out of range for {M}x{N}")
    xp = np.zeros((M, N))
    xp[m_p, :] = 1.0
    xp[:, n_p] = 1.0
    return xp


def multi_pilot_matrix(positions, M: int, N: int) -> np.ndarray:
    """0/1 pilot frame with ones exactly at the given (m, n) positions."""
    xp = np.zeros((M, N))
    seen = set()
    for m, n in positions:
        if not (0 <= m < M and 0 <= n < N):
            raise ValueError(f"pilot position ({m},{n}) out of range for {M}x{N}")
        if (m, n) in seen:
            raise ValueError(f"duplicate pilot position ({m},{n})")
        seen.add((m, n))
        xp[m, n] = 1.0
    return xp


def uniform_pilot_grid(M: int, N: int, grid_m: int, grid_n: int) -> tuple[tuple[int, int], ...]:
    """Centered uniform grid_m x grid_n positions, stride (M/grid_m, N/grid_n)."""
    if M % grid_m or N % grid_n:
        raise ValueError("grid dimensions must divide the frame dimensions")
    ms = np.arange(grid_m) * (M // grid_m) + M // (2 * grid_m)
    ns = np.arange(grid_n) * (N // grid_n) + N // (2 * grid_n)
    return tuple((int(m), int(n)) for m in ms for n in ns)


@dataclass(frozen=True)
class CrossPilots:
    """The proposed layout; defaults to the grid center when indices are None."""

    m_p: int | None = None
    n_p: int | None = None

    def resolve(self, cfg: FrameConfig) -> "CrossPilots":
        return CrossPilots(
            m_p=cfg.M // 2 if self.m_p is None else self.m_p,
            n_p=cfg.N // 2 if self.n_p is None else self.n_p,
        )

    def n_pilots(self, cfg: FrameConfig) -> int:
        return cfg.M + cfg.N - 1

    def matrix(self, cfg: FrameConfig) -> np.ndarray:
        r = self.resolve(cfg)
        return cross_pilot_matrix(r.m_p, r.n_p, cfg.M, cfg.N)


@dataclass(frozen=True)
class MultiPilots:
    """Comparator layout: isolated pilots at explicit positions."""

    positions: tuple[tuple[int, int], ...]

    @classmethod
    def uniform(cls, cfg: FrameConfig, grid_m: int = 8, grid_n: int = 4) -> "MultiPilots":
        return cls(positions=uniform_pilot_grid(cfg.M, cfg.N, grid_m, grid_n))

    def n_pilots(self, cfg: FrameConfig) -> int:
        return len(self.positions)

    def matrix(self, cfg: FrameConfig) -> np.ndarray:
        return multi_pilot_matrix(self.positions, cfg.M, cfg.N)

    def windows(self, cfg: FrameConfig) -> tuple[int, int]:
        """Per-pilot search windows: the minimal pilot spacing per axis."""
        def min_gap(values: list[int], period: int) -> int:
            distinct = sorted(set(values))
            if len(distinct) < 2:
                return period
            gaps = [b - a for a, b in zip(distinct, distinct[1:])]
            gaps.append(distinct[0] + period - distinct[-1])
            return min(gaps)

        ms = [m for m, _ in self.positions]
        ns = [n for _, n in self.positions]
        return min_gap(ms, cfg.M), min_gap(ns, cfg.N)


PilotScheme = CrossPilots | MultiPilots


@dataclass(frozen=True)
class TxFrame:
    """Superimposed transmit frame: X = sqrt(Es)*Xd + sqrt(Ep)*Xp."""

    X: np.ndarray
    Xd: np.ndarray
    Xp: np.ndarray
    bits: np.ndarray
    alloc: EnergyAllocation
    scheme: PilotScheme


def build_tx_frame(bits: np.ndarray, scheme: PilotScheme, alloc: EnergyAllocation,
                   qam_order: int, cfg: FrameConfig) -> TxFrame:
    """Map bits onto unit-energy QAM over all MN cells and add the pilots."""
    bits = np.asarray(bits)
    bits_per_sym = int(np.log2(qam_order))
    if bits.size != cfg.n_cells * bits_per_sym:
        raise ValueError(
            f"need {cfg.n_cells * bits_per_sym} bits for {qam_order}-QAM on "
            f"a {cfg.M}x{cfg.N} frame, got {bits.size}")
    xd = qam_map(bits, qam_order).reshape(cfg.M, cfg.N, order="F")
    xp = scheme.matrix(cfg)
    x = np.sqrt(alloc.es) * xd + np.sqrt(alloc.ep) * xp
    return TxFrame(X=x, Xd=xd, Xp=xp, bits=bits, alloc=alloc, scheme=scheme)


def oversample(samples: np.ndarray, factor: int) -> np.ndarray:
    """FFT interpolation of the frame's sample sequence (for PAPR studies)."""
    if factor == 1:
        return np.asarray(samples)
    n = samples.size
    spectrum = np.fft.fft(samples)
    padded = np.zeros(n * factor, dtype=complex)
    half = n // 2
    padded[:half] = spectrum[:half]
    padded[-(n - half):] = spectrum[half:]
    return np.fft.ifft(padded) * factor


def papr_db(samples: np.ndarray, oversampling: int = 1) -> float:
    """Peak-to-average power ratio of the time-domain samples, in dB."""
    s = oversample(np.asarray(samples), oversampling)
    power = np.abs(s) ** 2
    mean = power.mean()
    if mean == 0:
        raise ValueError("PAPR undefined for an all-zero signal")
    return float(10.0 * np.log10(power.max() / mean))


def frame_papr_db(frame: TxFrame, cfg: FrameConfig, oversampling: int = 1) -> float:
    return papr_db(idzt(frame.X, cfg), oversampling)
