"""QAM mapping and the path-wise matched-filter + MRC detector.

Square Gray-mapped QAM at unit average energy.  Per symbol the first half
of the bits drives the I axis, the second half the Q axis; on each axis
the all-zeros bit group maps to the most positive level, so for 4-QAM
bits 00 -> (+1+j)/sqrt(2).

Detection: each beamformed path is passed through the adjoint of its
estimated channel operator, weighted by conj(alpha_hat), summed, and
normalized by sum |alpha_hat|^2 (standard MRC weights); the known pilot
frame is then subtracted and hard decisions are taken.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import EnergyAllocation
from .dd_core import FrameConfig, apply_path_operator_adjoint, dzt, vec


def _axis_levels(bits_per_axis: int) -> np.ndarray:
    # Gray-ordered ladder, index 0 (bit group 0..0) at the most positive level.
    n_levels = 1 << bits_per_axis
    return (n_levels - 1) - 2 * np.arange(n_levels, dtype=float)


def _gray_to_index(codes: np.ndarray) -> np.ndarray:
    idx = codes.copy()
    shift = 1
    while shift < idx.itemsize * 8:
        idx ^= idx >> shift
        shift *= 2
    return idx


def _index_to_gray(idx: np.ndarray) -> np.ndarray:
    return idx ^ (idx >> 1)


def _qam_params(order: int) -> tuple[int, float]:
    bits_per_sym = int(np.log2(order))
    if 2 ** bits_per_sym != order or bits_per_sym % 2:
        raise ValueError(f"unsupported QAM order {order}; need an even power of 2")
    bits_per_axis = bits_per_sym // 2
    n_levels = 1 << bits_per_axis
    # mean per-axis power of the +/-1, +/-3, ... ladder: (L^2 - 1)/3
    norm = np.sqrt(2.0 * (n_levels ** 2 - 1) / 3.0)
    return bits_per_axis, norm


def _bits_to_levels(bits: np.ndarray, bits_per_axis: int) -> np.ndarray:
    groups = bits.reshape(-1, bits_per_axis)
    codes = np.zeros(groups.shape[0], dtype=np.int64)
    for b in range(bits_per_axis):
        codes = (codes << 1) | groups[:, b]
    return _axis_levels(bits_per_axis)[_gray_to_index(codes)]


def _levels_to_bits(levels: np.ndarray, bits_per_axis: int) -> np.ndarray:
    n_levels = 1 << bits_per_axis
    idx = np.clip(np.round(((n_levels - 1) - levels) / 2).astype(np.int64),
                  0, n_levels - 1)
    codes = _index_to_gray(idx)
    out = np.zeros((levels.size, bits_per_axis), dtype=np.int64)
    for b in range(bits_per_axis):
        out[:, b] = (codes >> (bits_per_axis - 1 - b)) & 1
    return out


def qam_map(bits: np.ndarray, order: int = 4) -> np.ndarray:
    """Gray-mapped square QAM symbols with unit average energy."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    bits_per_axis, norm = _qam_params(order)
    if bits.size % (2 * bits_per_axis):
        raise ValueError(f"bit count {bits.size} is not a multiple of "
                         f"{2 * bits_per_axis} for {order}-QAM")
    per_sym = bits.reshape(-1, 2 * bits_per_axis)
    i_lvl = _bits_to_levels(per_sym[:, :bits_per_axis].ravel(), bits_per_axis)
    q_lvl = _bits_to_levels(per_sym[:, bits_per_axis:].ravel(), bits_per_axis)
    return (i_lvl + 1j * q_lvl) / norm


def qam_demap(symbols: np.ndarray, order: int = 4) -> np.ndarray:
    """Hard-decision demapping: slice each axis to the nearest level."""
    symbols = np.asarray(symbols).ravel()
    bits_per_axis, norm = _qam_params(order)
    i_bits = _levels_to_bits(symbols.real * norm, bits_per_axis)
    q_bits = _levels_to_bits(symbols.imag * norm, bits_per_axis)
    return np.concatenate([i_bits, q_bits], axis=1).reshape(-1)


def ber(bits_hat: np.ndarray, bits_ref: np.ndarray) -> float:
    bits_hat = np.asarray(bits_hat)
    bits_ref = np.asarray(bits_ref)
    if bits_hat.shape != bits_ref.shape:
        raise ValueError("bit sequences must have equal length")
    return float(np.mean(bits_hat != bits_ref))


@dataclass(frozen=True)
class DetectionResult:
    bits_hat: np.ndarray
    symbol_estimates: np.ndarray   # post-combining, pre-slicing data frame
    ber: float


def mf_mrc_detect(beamformed, estimates, pilot_frame: np.ndarray,
                  alloc: EnergyAllocation, cfg: FrameConfig, qam_order: int,
                  bits_ref: np.ndarray | None = None) -> DetectionResult:
    """Path-wise matched filter + maximal-ratio combining + pilot removal.

    beamformed: one length-MN vector per estimated path (shared with the
    estimator).  estimates: an EstimateSet or any object with .paths of
    (alpha_hat, l_hat, k_hat).
    """
    paths = estimates.paths
    if len(beamformed) != len(paths):
        raise ValueError("need exactly one beamformed vector per path estimate")
    if alloc.es <= 0:
        raise ValueError("cannot detect data with Es = 0")
    gain_power = sum(abs(p.alpha_hat) ** 2 for p in paths)
    if gain_power == 0:
        raise ValueError("all-zero channel estimate; MRC combining undefined")

    combined = np.zeros(cfg.n_cells, dtype=complex)
    for r_p, est in zip(beamformed, paths):
        combined += np.conj(est.alpha_hat) * apply_path_operator_adjoint(
            np.asarray(r_p), est.l_hat, est.k_hat, cfg)
    x_hat = dzt(combined, cfg) / gain_power
    data_hat = (x_hat - np.sqrt(alloc.ep) * pilot_frame) / np.sqrt(alloc.es)
    bits_hat = qam_demap(vec(data_hat), qam_order)
    rate = ber(bits_hat, bits_ref) if bits_ref is not None else float("nan")
    return DetectionResult(bits_hat=bits_hat, symbol_estimates=data_hat, ber=rate)
