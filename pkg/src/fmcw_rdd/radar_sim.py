"""FMCW chirp-sequence IF signal simulation.

A frame is an ``N x M`` complex matrix (fast time ``n`` down the rows, slow
time ``m`` across the columns) made of point-object sinusoids, circular
AWGN and gated non-coherent chirp interference.  Noise and interference are
scaled relative to the object power by the scenario's SNR and SNIR.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

C = 299_792_458.0


class ConfigError(ValueError):
    """Invalid radar configuration or sampling bounds."""


class RangeOverflowError(ValueError):
    """An object's beat frequency lies above the Nyquist limit."""


class DegeneratePowerError(ValueError):
    """Power scaling was requested against an all-zero object signal."""


@dataclass(frozen=True)
class RadarConfig:
    f0: float = 79e9
    B: float = 0.27e9
    T: float = 12.8e-6
    T_r: float | None = None
    B_if: float = 10e6
    N: int = 512
    M: int = 128
    A: int = 16
    window: str = "hann"

    def __post_init__(self):
        if self.T_r is None:
            object.__setattr__(self, "T_r", self.T)
        if not (self.f0 > 0 and self.B > 0 and self.T > 0 and self.B_if > 0):
            raise ConfigError("f0, B, T and B_if must be positive")
        if self.T_r < self.T:
            raise ConfigError(f"T_r={self.T_r} shorter than sweep T={self.T}")
        if self.N < 2 or self.M < 2:
            raise ConfigError("N and M must be at least 2")
        if self.window != "hann":
            raise ConfigError(f"unsupported window {self.window!r}")

    @property
    def fs(self) -> float:
        return self.N / self.T

    @property
    def Ts(self) -> float:
        return self.T / self.N

    @property
    def slope(self) -> float:
        return self.B / self.T

    @property
    def v_max(self) -> float:
        """Largest unambiguous |velocity| for the ramp repetition interval."""
        return C / (4.0 * self.f0 * self.T_r)

    def range_bin(self, R: float, v: float = 0.0) -> float:
        """Fractional range bin of an object (beat frequency times T)."""
        return beat_frequency(self, R, v) * self.T

    def doppler_bin(self, v: float) -> float:
        """Fractional Doppler bin offset from the zero-velocity bin."""
        return doppler_frequency(self, v) * self.M * self.T_r


# Full-size ego radar; the desk preset keeps the chirp slope, sample rate
# and IF bandwidth but shortens the ramp, with idle time so that the
# Doppler axis still resolves the velocity span.
PAPER_CONFIG = RadarConfig()
DESK_CONFIG = RadarConfig(B=0.0675e9, T=3.2e-6, T_r=25.6e-6, N=128, M=32)


@dataclass(frozen=True)
class ObjectSpec:
    range: float
    velocity: float
    amplitude: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class InterfererSpec:
    f0_i: float
    B_i: float
    T_i: float
    t_offset: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.T_i <= 0:
            raise ConfigError("interferer sweep duration must be positive")


@dataclass(frozen=True)
class ScenarioSpec:
    objects: tuple[ObjectSpec, ...]
    interferers: tuple[InterfererSpec, ...] = ()
    snr_db: float = float("inf")
    snir_db: float = float("inf")
    seed: int = 0


@dataclass(frozen=True)
class SamplingBounds:
    """Uniform sampling intervals for scenario generation; defaults are the full-size ranges."""

    n_objects: tuple[int, int] = (1, 20)
    range_m: tuple[float, float] = (0.0, 100.0)
    velocity: tuple[float, float] = (-20.0, 20.0)
    amplitude: tuple[float, float] = (1.0, 1.0)
    n_interferers: tuple[int, int] = (1, 1)
    f0_i: tuple[float, float] = (78.9e9, 79.1e9)
    B_i: tuple[float, float] = (0.15e9, 0.25e9)
    T_i: tuple[float, float] = (12e-6, 24e-6)
    snr_db: tuple[float, float] = (-15.5, -0.5)
    snir_db: tuple[float, float] = (15.0, 35.0)

    def validate(self) -> None:
        for name in self.__dataclass_fields__:
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigError(f"bound {name}: min {lo} > max {hi}")
        if self.n_objects[0] < 0 or self.n_interferers[0] < 0:
            raise ConfigError("object and interferer counts must be non-negative")
        if self.range_m[0] < 0:
            raise ConfigError("ranges must be non-negative")
        if self.T_i[0] <= 0:
            raise ConfigError("interferer sweep duration must be positive")

    def with_(self, **kw) -> "SamplingBounds":
        return replace(self, **kw)


PAPER_BOUNDS = SamplingBounds()
# Desk frames have N*M = 4096 cells instead of 65536; SNR is raised by the
# lost coherent integration gain (12.04 dB).
DESK_BOUNDS = SamplingBounds(snr_db=(-3.46, 11.54))


def beat_frequency(cfg: RadarConfig, R, v=0.0):
    return 2.0 * cfg.B * np.asarray(R) / (C * cfg.T) + doppler_frequency(cfg, v)


def doppler_frequency(cfg: RadarConfig, v):
    return 2.0 * cfg.f0 * np.asarray(v) / C


def _uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def sample_scenario(
    rng: np.random.Generator | int,
    cfg: RadarConfig = PAPER_CONFIG,
    bounds: SamplingBounds = PAPER_BOUNDS,
) -> ScenarioSpec:
    """Draw a random scenario; every parameter is uniform within ``bounds``.

    Passing an int seeds a fresh generator and records the seed in the
    returned spec, which then fixes the noise realization in
    :func:`assemble_frame`.
    """
    bounds.validate()
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    else:
        seed = int(rng.integers(0, 2**63 - 1))

    n_obj = int(rng.integers(bounds.n_objects[0], bounds.n_objects[1] + 1))
    objects = tuple(
        ObjectSpec(
            range=_uniform(rng, *bounds.range_m),
            velocity=_uniform(rng, *bounds.velocity),
            amplitude=_uniform(rng, *bounds.amplitude),
            phase=float(rng.uniform(0.0, 2 * np.pi)),
        )
        for _ in range(n_obj)
    )
    n_int = int(rng.integers(bounds.n_interferers[0], bounds.n_interferers[1] + 1))
    interferers = []
    for _ in range(n_int):
        T_i = _uniform(rng, *bounds.T_i)
        interferers.append(
            InterfererSpec(
                f0_i=_uniform(rng, *bounds.f0_i),
                B_i=_uniform(rng, *bounds.B_i),
                T_i=T_i,
                t_offset=float(rng.uniform(0.0, T_i)),
            )
        )
    return ScenarioSpec(
        objects=objects,
        interferers=tuple(interferers),
        snr_db=_uniform(rng, *bounds.snr_db),
        snir_db=_uniform(rng, *bounds.snir_db),
        seed=seed,
    )


def synth_objects(cfg: RadarConfig, objects: Sequence[ObjectSpec]) -> np.ndarray:
    """Sum of de-chirped point-object tones, shape ``(N, M)``.

    Each object contributes ``A exp(j(2 pi f_b n Ts + 2 pi f_D m T_r + phi))``.
    """
    n = np.arange(cfg.N)[:, None]
    m = np.arange(cfg.M)[None, :]
    out = np.zeros((cfg.N, cfg.M), dtype=complex)
    for obj in objects:
        fb = float(beat_frequency(cfg, obj.range, obj.velocity))
        if abs(fb) >= cfg.fs / 2:
            raise RangeOverflowError(
                f"object at {obj.range} m has beat frequency {fb:.4g} Hz >= fs/2"
            )
        fd = float(doppler_frequency(cfg, obj.velocity))
        # separable: outer product of a fast-time and a slow-time phasor
        fast = np.exp(1j * 2 * np.pi * fb * cfg.Ts * n)
        slow = np.exp(1j * (2 * np.pi * fd * cfg.T_r * m + obj.phase))
        out += obj.amplitude * (fast * slow)
    return out


def sample_times(cfg: RadarConfig) -> np.ndarray:
    """Absolute sample instants, shape ``(N, M)``."""
    n = np.arange(cfg.N)[:, None]
    m = np.arange(cfg.M)[None, :]
    return m * cfg.T_r + n * cfg.Ts


def synth_interference(
    cfg: RadarConfig, interferers: Sequence[InterfererSpec]
) -> tuple[np.ndarray, np.ndarray]:
    """Gated chirp-difference interference and its ground-truth mask.

    The interferer repeats its ramp back to back from ``t_offset`` (and
    periodically before it).  The mixed signal ``exp(j(phi_I - phi_E))``
    passes only where the instantaneous frequency difference is within
    the IF bandwidth.  Contributions are scaled by each interferer's
    ``amplitude`` and summed.
    """
    data = np.zeros((cfg.N, cfg.M), dtype=complex)
    mask = np.zeros((cfg.N, cfg.M), dtype=bool)
    t = sample_times(cfg)
    tau_e = np.broadcast_to(np.arange(cfg.N)[:, None] * cfg.Ts, t.shape)
    k_e = cfg.slope
    f_e = cfg.f0 + k_e * tau_e
    phi_e = 2 * np.pi * (cfg.f0 * tau_e + 0.5 * k_e * tau_e**2)
    for itf in interferers:
        k_i = itf.B_i / itf.T_i
        tau_i = np.mod(t - itf.t_offset, itf.T_i)
        # exact ramp starts can round to just below T_i; snap them to 0
        tau_i = np.where(itf.T_i - tau_i < 1e-9 * itf.T_i, tau_i - itf.T_i, tau_i)
        f_i = itf.f0_i + k_i * tau_i
        gate = np.abs(f_i - f_e) <= cfg.B_if
        phi_i = 2 * np.pi * (itf.f0_i * tau_i + 0.5 * k_i * tau_i**2)
        dphi = np.mod(phi_i - phi_e, 2 * np.pi)
        data += np.where(gate, itf.amplitude * np.exp(1j * dphi), 0.0)
        mask |= gate
    return data, mask


@dataclass
class IFFrame:
    data: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.mask is None:
            self.mask = np.zeros(self.data.shape, dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.data.shape:
            raise ValueError(f"mask shape {self.mask.shape} != data shape {self.data.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass
class FramePair:
    """Clean target, interfered input and the pieces used to build them."""

    clean: IFFrame
    interfered: IFFrame
    objects: np.ndarray
    noise: np.ndarray
    interference: np.ndarray


def mean_power(x: np.ndarray) -> float:
    return float(np.mean(np.abs(x) ** 2)) if x.size else 0.0


def interference_scale(p_signal_noise: float, raw_interference, mask, snir_db: float) -> float:
    """Amplitude factor for the raw interference.

    The interference power, averaged over the interfered (masked) samples
    only, is set ``snir_db`` decibels above the object-plus-noise power of
    the frame.  Larger values therefore mean stronger interference.
    """
    if not np.isfinite(snir_db) or not mask.any():
        return 0.0
    p_raw = mean_power(raw_interference[mask])
    if p_raw == 0.0:
        return 0.0
    return float(np.sqrt(p_signal_noise * 10 ** (snir_db / 10) / p_raw))


def scaled_interference(
    cfg: RadarConfig, clean: np.ndarray, interferers: Sequence[InterfererSpec], snir_db: float
) -> tuple[np.ndarray, np.ndarray]:
    """Interference matrix scaled against ``clean`` and its mask."""
    clean = np.asarray(clean)
    if clean.shape != (cfg.N, cfg.M):
        raise ValueError(f"frame shape {clean.shape} != configured ({cfg.N}, {cfg.M})")
    raw, mask = synth_interference(cfg, interferers)
    p_sn = mean_power(clean)
    if raw.any() and p_sn == 0.0 and np.isfinite(snir_db):
        raise DegeneratePowerError("object-plus-noise signal is all zero; SNIR undefined")
    beta = interference_scale(p_sn, raw, mask, snir_db)
    if beta == 0.0:
        return np.zeros_like(raw), np.zeros_like(mask)
    return beta * raw, mask


def inject_interference(
    cfg: RadarConfig, clean: np.ndarray, interferers: Sequence[InterfererSpec], snir_db: float
) -> IFFrame:
    """Add SNIR-scaled interference to an existing (simulated or measured)
    clean frame."""
    interference, mask = scaled_interference(cfg, clean, interferers, snir_db)
    return IFFrame(np.asarray(clean) + interference, mask)


def simulate(cfg: RadarConfig, scenario: ScenarioSpec) -> FramePair:
    """Build the clean (objects + noise) and interfered frames of a scenario."""
    rng = np.random.default_rng(scenario.seed)
    objects = synth_objects(cfg, scenario.objects)
    p_obj = mean_power(objects)

    if np.isfinite(scenario.snr_db):
        if p_obj == 0.0:
            raise DegeneratePowerError("object signal is all zero; SNR undefined")
        sigma = np.sqrt(p_obj / 10 ** (scenario.snr_db / 10))
        shape = (cfg.N, cfg.M)
        noise = sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    else:
        noise = np.zeros((cfg.N, cfg.M), dtype=complex)
    clean = objects + noise
    interference, mask = scaled_interference(cfg, clean, scenario.interferers, scenario.snir_db)
    return FramePair(
        clean=IFFrame(clean),
        interfered=IFFrame(clean + interference, mask),
        objects=objects,
        noise=noise,
        interference=interference,
    )


def assemble_frame(cfg: RadarConfig, scenario: ScenarioSpec) -> IFFrame:
    """Interfered IF frame ``objects + noise + interference`` with its mask."""
    return simulate(cfg, scenario).interfered
