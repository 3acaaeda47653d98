"""CA-CFAR peak detection, SINR scoring and empirical CDFs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .radar_sim import ConfigError

_TINY = np.finfo(float).tiny


class UndefinedSINRError(ValueError):
    """SINR requested for an empty peak set."""


@dataclass(frozen=True)
class CfarParams:
    """Reference window extents (total, per side = half) and guard half-widths.

    Axis order is (range, doppler).  The default reads the 6 x 8 window as
    8 range by 6 Doppler reference cells around the cell under test.
    """

    ref_cells: tuple[int, int] = (8, 6)
    guard_cells: tuple[int, int] = (2, 2)
    scale_alpha: float = 10 ** (13 / 10)

    def __post_init__(self):
        for r in self.ref_cells:
            if r < 2 or r % 2:
                raise ConfigError(f"reference extent {r} must be even and >= 2")
        if min(self.guard_cells) < 0:
            raise ConfigError("guard cells must be non-negative")
        if not self.scale_alpha > 1:
            raise ConfigError("CFAR scale must exceed 1")

    @property
    def half_window(self) -> tuple[int, int]:
        """Outer half-width (guard + reference) per axis."""
        return tuple(g + r // 2 for g, r in zip(self.guard_cells, self.ref_cells))

    def reference_kernel(self) -> np.ndarray:
        hr, hd = self.half_window
        gr, gd = self.guard_cells
        k = np.ones((2 * hr + 1, 2 * hd + 1))
        k[hr - gr : hr + gr + 1, hd - gd : hd + gd + 1] = 0.0
        return k


def cfar_threshold(power: np.ndarray, params: CfarParams = CfarParams()) -> np.ndarray:
    """Per-cell CA-CFAR threshold; border windows use in-map cells only."""
    power = np.asarray(power, dtype=float)
    if power.ndim != 2:
        raise ValueError("power map must be 2-D")
    hr, hd = params.half_window
    if 2 * hr + 1 > power.shape[0] or 2 * hd + 1 > power.shape[1]:
        raise ConfigError(
            f"CFAR window {(2 * hr + 1, 2 * hd + 1)} larger than map {power.shape}"
        )
    k = params.reference_kernel()
    total = ndimage.correlate(power, k, mode="constant", cval=0.0)
    count = ndimage.correlate(np.ones_like(power), k, mode="constant", cval=0.0)
    mean = np.maximum(total / count, 0.0)
    return params.scale_alpha * np.maximum(mean, _TINY)


def ca_cfar(power: np.ndarray, params: CfarParams = CfarParams()) -> list[tuple[int, int]]:
    """Cells whose power exceeds alpha times the reference-cell mean."""
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("power map must be non-negative")
    hits = np.argwhere(power > cfar_threshold(power, params))
    return [(int(n), int(m)) for n, m in hits]


def noise_mask(shape, peaks, params: CfarParams = CfarParams()) -> np.ndarray:
    """True at cells outside every peak's guard + reference neighbourhood."""
    keep = np.ones(shape, dtype=bool)
    hr, hd = params.half_window
    for n, m in peaks:
        keep[max(n - hr, 0) : n + hr + 1, max(m - hd, 0) : m + hd + 1] = False
    return keep


def sinr(rd: np.ndarray, peaks, params: CfarParams = CfarParams()) -> float:
    """Mean peak-cell power over the noise floor, in dB.

    The noise floor is the mean power of all cells outside the peaks'
    guard + reference neighbourhoods.
    """
    if len(peaks) == 0:
        raise UndefinedSINRError("no peaks to score")
    power = np.abs(np.asarray(rd)) ** 2
    idx = tuple(np.asarray(peaks).T)
    signal = float(np.mean(power[idx]))
    keep = noise_mask(power.shape, peaks, params)
    floor = float(np.mean(power[keep])) if keep.any() else 0.0
    return 10.0 * np.log10(max(signal, _TINY) / max(floor, _TINY))


def sinr_cdf(values) -> np.ndarray:
    """Empirical CDF as an array of ``(value, fraction <= value)`` rows.

    Tied values collapse into one step.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    uniq, counts = np.unique(v, return_counts=True)
    return np.column_stack([uniq, np.cumsum(counts) / v.size])
