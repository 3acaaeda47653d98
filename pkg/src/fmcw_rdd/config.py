"""Experiment configuration: presets plus an INI-style key = value file.

Example file::

    [experiment]
    scale = desk
    arch = 4,4,4,4,4,4,2

    [sampling]
    snir_db = 15, 35

    [train]
    epochs = 60
    lr = 0.003

Every key is optional; unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .cnn import ArchitectureSpec
from .detection import CfarParams
from .mitigation import ImatParams
from .radar_sim import (
    DESK_BOUNDS,
    DESK_CONFIG,
    PAPER_BOUNDS,
    PAPER_CONFIG,
    ConfigError,
    RadarConfig,
    SamplingBounds,
)
from .training import TrainConfig

# Second simulated distribution standing in for measured data: velocities
# biased towards the negative ego speed of a slow platform, more and
# unequal reflectors, shorter ranges.
REAL_LIKE_BOUNDS = SamplingBounds(
    n_objects=(5, 20),
    range_m=(0.0, 60.0),
    velocity=(-8.0, 4.0),
    amplitude=(0.3, 3.0),
)

METHODS = ("interfered", "clean", "zeroing", "imat", "ramp_filter", "cnn")


@dataclass
class ExperimentConfig:
    scale: str = "desk"
    radar: RadarConfig = DESK_CONFIG
    bounds: SamplingBounds = DESK_BOUNDS
    alt_bounds: SamplingBounds = field(default_factory=lambda: replace(REAL_LIKE_BOUNDS, snr_db=DESK_BOUNDS.snr_db))
    # deep and narrow: the receptive field matters more than width here
    arch: ArchitectureSpec = ArchitectureSpec((4, 4, 4, 4, 4, 4, 2))
    train: TrainConfig = field(default_factory=lambda: TrainConfig(lr=1e-2, epochs=300, patience=100))
    cfar: CfarParams = CfarParams()
    imat: ImatParams = ImatParams()
    methods: tuple[str, ...] = METHODS
    splits: tuple[int, int, int] = (200, 25, 25)
    group_size: int = 8
    # architecture sweep grid
    sweep_layers: tuple[int, ...] = (2, 3, 4)
    sweep_max_kernels: tuple[int, ...] = (8, 16, 32)
    # finite-sample study
    sample_sizes: tuple[int, ...] = tuple(range(10, 121, 10))
    repetitions: int = 5
    pretrain_size: int = 100
    sample_variants: tuple[str, ...] = ("sim", "sim_vreal", "real", "transfer")

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown mitigation method {m!r}")
        if self.group_size < 1:
            raise ConfigError("group size must be positive")
        if min(self.splits) < 0 or sum(self.splits) == 0:
            raise ConfigError("split counts must be non-negative and not all zero")


def preset(scale: str) -> ExperimentConfig:
    if scale == "desk":
        return ExperimentConfig()
    if scale == "paper":
        return ExperimentConfig(
            scale="paper",
            radar=PAPER_CONFIG,
            bounds=PAPER_BOUNDS,
            alt_bounds=REAL_LIKE_BOUNDS,
            arch=ArchitectureSpec((512, 32, 16, 2)),
            train=TrainConfig(),
            splits=(2500, 250, 250),
            group_size=32,
            sweep_layers=tuple(range(2, 11)),
            sweep_max_kernels=tuple(2**n for n in range(3, 9)),
            sample_sizes=tuple(range(50, 601, 50)),
            repetitions=20,
            pretrain_size=500,
        )
    raise ConfigError(f"unknown scale {scale!r} (expected 'paper' or 'desk')")


def _parse_value(text: str, like):
    text = text.strip()
    if isinstance(like, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(like, tuple):
        items = [t.strip() for t in text.strip("()[]").split(",") if t.strip()]
        if like and isinstance(like[0], str):
            return tuple(items)
        if like and isinstance(like[0], float):
            return tuple(float(t) for t in items)
        return tuple(int(t) if float(t).is_integer() and "." not in t and "e" not in t.lower() else float(t) for t in items)
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float) or like is None:
        return float(text)
    return text


def _apply(obj, items, section: str):
    names = {f.name: f for f in fields(obj)}
    updates = {}
    for key, text in items:
        if key not in names:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        try:
            updates[key] = _parse_value(text, getattr(obj, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc
    try:
        return replace(obj, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def load_config(path=None, scale: str | None = None) -> ExperimentConfig:
    """Preset for ``scale`` (file value, then ``desk``) with file overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # radar keys such as N and M are case-sensitive
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} not found")
        try:
            parser.read_string(p.read_text(encoding="utf-8"), source=str(p))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
    file_scale = parser.get("experiment", "scale", fallback=None)
    cfg = preset(scale or file_scale or "desk")

    sections = {
        "radar": "radar",
        "sampling": "bounds",
        "alt_sampling": "alt_bounds",
        "train": "train",
        "cfar": "cfar",
        "imat": "imat",
    }
    updates = {}
    for section in parser.sections():
        items = parser.items(section, raw=True)
        items = [(k, v) for k, v in items if k not in parser.defaults()]
        if section == "experiment":
            for key, text in items:
                if key == "scale":
                    continue
                if key == "arch":
                    updates["arch"] = ArchitectureSpec.parse(text)
                elif key in {f.name for f in fields(cfg)} and key not in sections.values():
                    try:
                        updates[key] = _parse_value(text, getattr(cfg, key))
                    except ValueError as exc:
                        raise ConfigError(f"[experiment] {key}: {exc}") from exc
                else:
                    raise ConfigError(f"unknown key {key!r} in [experiment]")
        elif section in sections:
            attr = sections[section]
            updates[attr] = _apply(getattr(cfg, attr), items, section)
        else:
            raise ConfigError(f"unknown section [{section}]")
    try:
        cfg = replace(cfg, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg.bounds.validate()
    cfg.alt_bounds.validate()
    return cfg
