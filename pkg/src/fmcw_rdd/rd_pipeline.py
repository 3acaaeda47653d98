"""Range-Doppler processing: windowed DFT over fast time, then slow time.

Transforms are unnormalized forward DFTs with a periodic Hann window and
no amplitude correction.  The Doppler axis is centre-shifted so the zero
velocity bin sits at index ``M // 2``; the range axis is left unshifted.
"""
from __future__ import annotations

import numpy as np

from .radar_sim import IFFrame, RadarConfig

DB_FLOOR = 1e-12


def hann(n: int) -> np.ndarray:
    """Periodic Hann window ``0.5 (1 - cos(2 pi k / n))``."""
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / n))


WINDOWS = {"hann": hann}


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, IFFrame):
        x = x.data
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
    return x


def range_dft(frame, cfg: RadarConfig | None = None, window: str = "hann") -> np.ndarray:
    """Window each column over fast time and DFT it -> range profiles ``S_R``."""
    x = _as_matrix(frame)
    if cfg is not None and x.shape != (cfg.N, cfg.M):
        raise ValueError(f"frame shape {x.shape} != configured ({cfg.N}, {cfg.M})")
    w = WINDOWS[window](x.shape[0])
    return np.fft.fft(x * w[:, None], axis=0)


def doppler_dft(profiles, window: str = "hann") -> np.ndarray:
    """Window each row over slow time, DFT it and centre the Doppler axis."""
    x = _as_matrix(profiles)
    w = WINDOWS[window](x.shape[1])
    return np.fft.fftshift(np.fft.fft(x * w[None, :], axis=1), axes=1)


def rd_map(frame, cfg: RadarConfig | None = None) -> np.ndarray:
    return doppler_dft(range_dft(frame, cfg))


def to_channels(rd) -> np.ndarray:
    """Complex ``(..., N, M)`` map -> real ``(..., 2, N, M)`` tensor (re, im)."""
    rd = np.asarray(rd)
    return np.stack([rd.real, rd.imag], axis=-3)


def from_channels(t) -> np.ndarray:
    t = np.asarray(t)
    if t.ndim < 3 or t.shape[-3] != 2:
        raise ValueError(f"expected a channel axis of size 2 at -3, got shape {t.shape}")
    return t[..., 0, :, :] + 1j * t[..., 1, :, :]


def magnitude_db(rd, floor: float = DB_FLOOR) -> np.ndarray:
    return 20.0 * np.log10(np.abs(rd) + floor)
