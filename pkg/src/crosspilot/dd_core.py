"""Delay-Doppler domain primitives for a CP-OTFS frame.

Conventions (fixed once, everything else is derived from them):

* The N-point DFT is unitary with negative forward exponent,
  ``F[p, q] = exp(-2j*pi*p*q/N) / sqrt(N)``.  ``numpy.fft`` with
  ``norm="ortho"`` implements exactly this pair.
* A DD frame is an ``(M, N)`` complex array: delay index m is the row,
  Doppler index n the column.  Vectorisation is column-stacking (delay is
  the fast axis), so vec-index = m + n*M and ``vec``/``unvec`` use
  ``order="F"``.
* Operators are applied via per-axis FFTs and elementwise phases; no
  MN x MN matrix is ever materialised.  Dense Kronecker forms exist only
  as test oracles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class FrameConfig:
    """Static OTFS grid and timing parameters.

    M delay bins (subcarriers), N Doppler bins (time slots), subcarrier
    spacing delta_f, cyclic prefix length in samples, carrier frequency fc.
    """

    M: int
    N: int
    delta_f: float
    cp_samples: int = 0
    fc: float = 5.9e9

    def __post_init__(self):
        if self.M < 2 or self.N < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.M}x{self.N}")
        if self.delta_f <= 0:
            raise ValueError("delta_f must be positive")
        if self.fc <= 0:
            raise ValueError("fc must be positive")
        if self.cp_samples < 0 or int(self.cp_samples) != self.cp_samples:
            raise ValueError("cp_samples must be a non-negative integer")

    @property
    def T(self) -> float:
        """Useful symbol duration, 1/delta_f."""
        return 1.0 / self.delta_f

    @property
    def B(self) -> float:
        """Signal bandwidth M*delta_f."""
        return self.M * self.delta_f

    @property
    def T_cp(self) -> float:
        return self.cp_samples / self.B

    @property
    def T_prime(self) -> float:
        """Overall block duration T + T_cp."""
        return self.T + self.T_cp

    @property
    def T_frame(self) -> float:
        return self.N * self.T_prime

    @property
    def delta_tau(self) -> float:
        """Delay resolution 1/B."""
        return 1.0 / self.B

    @property
    def delta_nu(self) -> float:
        """Doppler resolution 1/(N*T_prime)."""
        return 1.0 / self.T_frame

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.fc

    @property
    def time_ratio(self) -> float:
        """T/T_prime, the intra-block fraction of the block duration."""
        return self.T / self.T_prime

    @property
    def n_cells(self) -> int:
        return self.M * self.N


def vec(frame: np.ndarray) -> np.ndarray:
    """Column-stack an (M, N) DD frame into a length-MN vector."""
    return np.asarray(frame).flatten(order="F")


def unvec(x: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Inverse of :func:`vec`."""
    x = np.asarray(x)
    if x.size != cfg.n_cells:
        raise ValueError(f"expected length {cfg.n_cells}, got {x.size}")
    return x.reshape(cfg.M, cfg.N, order="F")


def _check_frame(frame: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.shape != (cfg.M, cfg.N):
        raise ValueError(f"expected shape {(cfg.M, cfg.N)}, got {frame.shape}")
    return frame


def _check_samples(samples: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    samples = np.asarray(samples)
    if samples.shape != (cfg.n_cells,):
        raise ValueError(f"expected {cfg.n_cells} samples, got shape {samples.shape}")
    return samples


def idzt(frame: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Inverse discrete Zak transform: (F_N^H kron I_M) vec(frame).

    Equals a unitary N-point inverse DFT across each delay row, then
    column-stacking.  Unitary, so ||out|| == ||in||.
    """
    frame = _check_frame(frame, cfg)
    return vec(np.fft.ifft(frame, axis=1, norm="ortho"))


def dzt(samples: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Discrete Zak transform: unvec((F_N kron I_M) samples); inverse of idzt."""
    samples = _check_samples(samples, cfg)
    return np.fft.fft(samples.reshape(cfg.M, cfg.N, order="F"), axis=1, norm="ortho")


def apply_delay(block: np.ndarray, l: float, M: int | None = None) -> np.ndarray:
    """Apply the circulant fractional-delay operator C_M(l) to one M-block.

    C_M(l) = F_M^H diag(exp(-2j*pi*m*l/M)) F_M; an exact cyclic shift
    downward by l when l is an integer.
    """
    block = np.asarray(block)
    if M is None:
        M = block.shape[0]
    if block.shape[0] != M:
        raise ValueError(f"expected leading axis of length {M}, got {block.shape}")
    phase = np.exp(-2j * np.pi * np.arange(M) * l / M)
    spectrum = np.fft.fft(block, axis=0, norm="ortho")
    spectrum = spectrum * (phase[:, None] if block.ndim > 1 else phase)
    return np.fft.ifft(spectrum, axis=0, norm="ortho")


def doppler_phases(k: float, cfg: FrameConfig) -> np.ndarray:
    """(M, N) elementwise phases of the Doppler operator at normalized shift k.

    Block rotation exp(2j*pi*k*n/N) plus the intra-block (ICI) rotation
    exp(2j*pi*k*m*T/(M*N*T')).
    """
    m = np.arange(cfg.M)
    n = np.arange(cfg.N)
    inter = np.exp(2j * np.pi * k * n / cfg.N)
    intra = np.exp(2j * np.pi * k * m * cfg.time_ratio / (cfg.M * cfg.N))
    return intra[:, None] * inter[None, :]


def apply_doppler(samples: np.ndarray, k: float, cfg: FrameConfig) -> np.ndarray:
    """Apply the diagonal Doppler operator (inter- and intra-block phases)."""
    samples = _check_samples(samples, cfg)
    grid = samples.reshape(cfg.M, cfg.N, order="F") * doppler_phases(k, cfg)
    return vec(grid)


def apply_path_operator(samples: np.ndarray, l: float, k: float,
                        cfg: FrameConfig) -> np.ndarray:
    """One path's channel action: Doppler(k) . (I_N kron C_M(l)) . samples.

    Product of unitary factors, hence energy preserving.
    """
    samples = _check_samples(samples, cfg)
    grid = samples.reshape(cfg.M, cfg.N, order="F")
    grid = apply_delay(grid, l, cfg.M)
    return vec(grid * doppler_phases(k, cfg))


def apply_path_operator_adjoint(samples: np.ndarray, l: float, k: float,
                                cfg: FrameConfig) -> np.ndarray:
    """Adjoint (= inverse) of :func:`apply_path_operator`."""
    samples = _check_samples(samples, cfg)
    grid = samples.reshape(cfg.M, cfg.N, order="F") * np.conj(doppler_phases(k, cfg))
    grid = apply_delay(grid, -l, cfg.M)
    return vec(grid)
