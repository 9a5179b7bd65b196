import numpy as np
import pytest

from crosspilot import FrameConfig
from crosspilot.harness import default_config


@pytest.fixture(scope="session")
def cfg():
    """Reference frame geometry: 64x16, 30 kHz spacing, 16-sample CP."""
    return FrameConfig(M=64, N=16, delta_f=30e3, cp_samples=16, fc=5.9e9)


@pytest.fixture(scope="session")
def cfg_small():
    return FrameConfig(M=8, N=4, delta_f=15e3, cp_samples=2, fc=2e9)


@pytest.fixture(scope="session")
def exp():
    return default_config()


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def dft_matrix(n: int) -> np.ndarray:
    q = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(q, q) / n) / np.sqrt(n)


def random_frame(cfg, rng) -> np.ndarray:
    return (rng.standard_normal((cfg.M, cfg.N))
            + 1j * rng.standard_normal((cfg.M, cfg.N)))


def circular_distance(a: float, b: float, period: float) -> float:
    d = abs(a - b) % period
    return min(d, period - d)
