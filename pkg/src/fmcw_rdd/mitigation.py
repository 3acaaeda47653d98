"""Classical interference mitigation baselines.

Zeroing and IMAT need to know which IF samples are interfered; they take
the frame's mask as a perfect detector.  Ramp filtering is mask-free and
runs on the range profiles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radar_sim import ConfigError, IFFrame


@dataclass(frozen=True)
class ImatParams:
    max_iters: int = 10
    fraction: float = 0.9
    decay: float = 0.75

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("IMAT needs at least one iteration")
        if not 0 < self.fraction <= 1:
            raise ConfigError("IMAT initial fraction must lie in (0, 1]")
        if not 0 < self.decay < 1:
            raise ConfigError("IMAT decay must lie in (0, 1)")


def zeroing(frame: IFFrame) -> IFFrame:
    return IFFrame(np.where(frame.mask, 0, frame.data), np.zeros_like(frame.mask))


def imat(frame: IFFrame, params: ImatParams = ImatParams()) -> IFFrame:
    """Iterative masked-sample reconstruction with adaptive thresholding.

    Works on every ramp (column) at once over fast time.  Starting from the
    zeroed frame, each iteration keeps the spectral bins above
    ``fraction * decay**k * max|spectrum|`` of the current estimate, inverts
    and writes the result back into the masked samples only.
    """
    mask = frame.mask
    observed = np.where(mask, 0, frame.data).astype(complex)
    est = observed.copy()
    if mask.any():
        for k in range(params.max_iters):
            spec = np.fft.fft(est, axis=0)
            mag = np.abs(spec)
            tau = params.fraction * params.decay**k * mag.max(axis=0, keepdims=True)
            sparse = np.where(mag > tau, spec, 0)
            recon = np.fft.ifft(sparse, axis=0)
            est = np.where(mask, recon, observed)
    return IFFrame(est, np.zeros_like(mask))


def ramp_filter(profiles: np.ndarray) -> np.ndarray:
    """Clip every sample's magnitude to its range bin's slow-time minimum.

    Phases are untouched, so a row of constant magnitude (a clean object
    tone) passes through unchanged.
    """
    S = np.asarray(profiles)
    mag = np.abs(S)
    floor = mag.min(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(mag > floor, floor / mag, 1.0)
    return S * gain
