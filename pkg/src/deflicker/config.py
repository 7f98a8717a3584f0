"""Flat key=value run configuration shared by the CLI subcommands.

Recognized keys and defaults:

    ac_frequency      50.0        mains frequency in Hz
    gamma_w           1.0         waveform sharpening exponent
    exposure_time     1e-3        seconds
    row_readout_time  2e-5        seconds per row
    phases            0,2.0944,4.1888   three flicker phases in [0, 2pi)
    orientation       horizontal  stripe orientation (or vertical)
    model.channels    32,64,96    stage widths
    model.blocks      2,2,2       transformer blocks per stage
    model.heads       1,2,4       attention heads per stage
    model.window      8           attention window size
    model.gamma       2.66        feed-forward expansion factor
    train.lr          1e-4        Adam learning rate
    train.steps       200         optimization steps
    seed              0

Lines are `key=value`; blank lines and `#` comments are ignored.  Unknown
keys are rejected with their line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .flicker import FlickerParams
from .model import ModelConfig


class ConfigError(ValueError):
    """Malformed configuration file; message carries the line number."""


_DEFAULT_PHASES = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)


@dataclass
class CliConfig:
    ac_frequency: float = 50.0
    gamma_w: float = 1.0
    exposure_time: float = 1e-3
    row_readout_time: float = 2e-5
    phases: tuple[float, float, float] = _DEFAULT_PHASES
    orientation: str = "horizontal"
    model_channels: tuple[int, int, int] = (32, 64, 96)
    model_blocks: tuple[int, int, int] = (2, 2, 2)
    model_heads: tuple[int, int, int] = (1, 2, 4)
    model_window: int = 8
    model_gamma: float = 2.66
    train_lr: float = 1e-4
    train_steps: int = 200
    seed: int = 0

    def flicker_params(self) -> FlickerParams:
        return FlickerParams(
            ac_frequency=self.ac_frequency,
            gamma_w=self.gamma_w,
            exposure_time=self.exposure_time,
            row_readout_time=self.row_readout_time,
            phase_offsets=self.phases,
            orientation=self.orientation,
        )

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            channels=self.model_channels,
            blocks=self.model_blocks,
            heads=self.model_heads,
            window=self.model_window,
            gamma=self.model_gamma,
        )


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_floats3(text: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected 3 comma-separated values, got {len(parts)}")
    return tuple(float(p) for p in parts)


def _parse_ints3(text: str) -> tuple[int, int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected 3 comma-separated values, got {len(parts)}")
    return tuple(int(p, 10) for p in parts)


def _parse_orientation(text: str) -> str:
    # accept both bare and "-stripes" suffixed spellings
    value = text.strip().lower().removesuffix("-stripes")
    if value not in ("horizontal", "vertical"):
        raise ValueError(f"orientation must be horizontal or vertical, got {text!r}")
    return value


_KEYS = {
    "ac_frequency": ("ac_frequency", _parse_float),
    "gamma_w": ("gamma_w", _parse_float),
    "exposure_time": ("exposure_time", _parse_float),
    "row_readout_time": ("row_readout_time", _parse_float),
    "phases": ("phases", _parse_floats3),
    "orientation": ("orientation", _parse_orientation),
    "model.channels": ("model_channels", _parse_ints3),
    "model.blocks": ("model_blocks", _parse_ints3),
    "model.heads": ("model_heads", _parse_ints3),
    "model.window": ("model_window", _parse_int),
    "model.gamma": ("model_gamma", _parse_float),
    "train.lr": ("train_lr", _parse_float),
    "train.steps": ("train_steps", _parse_int),
    "seed": ("seed", _parse_int),
}


def parse_config(path) -> CliConfig:
    """Read a key=value file; all keys optional, unknown keys rejected."""
    cfg = CliConfig()
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, parse = _KEYS[key]
        try:
            setattr(cfg, attr, parse(value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return cfg
