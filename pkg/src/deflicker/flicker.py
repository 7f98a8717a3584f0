"""Rolling-shutter flicker synthesis for mains-powered lighting.

A lamp driven at AC frequency f emits with period 1/(2f): both half-cycles
light up, so the waveform is abs(sin(2 pi f t)) raised to a bulb exponent.
A rolling shutter exposes each row over a window offset by the row readout
time, which prints the waveform as stripes across the frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=200)

_DEFAULT_PHASES = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)


@dataclass(frozen=True)
class FlickerParams:
    """Physical description of the light, the sensor timing, and the burst."""

    ac_frequency: float = 50.0
    gamma_w: float = 1.0
    exposure_time: float = 1e-3
    row_readout_time: float = 2e-5
    phase_offsets: tuple[float, float, float] = _DEFAULT_PHASES
    orientation: str = "horizontal"
    min_gain: float = 0.05

    def __post_init__(self):
        if self.ac_frequency <= 0 or self.exposure_time <= 0 \
                or self.row_readout_time <= 0 or self.gamma_w <= 0:
            raise ValueError("timing and waveform parameters must be positive")
        if len(self.phase_offsets) != 3:
            raise ValueError(f"need 3 phase offsets, got {len(self.phase_offsets)}")
        for p in self.phase_offsets:
            if not 0.0 <= p < 2.0 * math.pi:
                raise ValueError(f"phase offsets must lie in [0, 2pi), got {p}")
        if not 0.0 <= self.min_gain < 1.0:
            raise ValueError(f"min_gain must lie in [0, 1), got {self.min_gain}")
        if self.orientation not in ("horizontal", "vertical"):
            raise ValueError(f"orientation must be horizontal or vertical, "
                             f"got {self.orientation!r}")

    @property
    def flicker_frequency(self) -> float:
        # full-wave rectified lamp output: twice the mains frequency
        return 2.0 * self.ac_frequency

    @property
    def stripe_period_rows(self) -> float:
        """Spatial period of the printed stripes, in rows."""
        return 1.0 / (self.flicker_frequency * self.row_readout_time)


def ac_waveform(t, params: FlickerParams):
    """Instantaneous light output at time t (seconds), peak 1."""
    return np.abs(np.sin(2.0 * np.pi * params.ac_frequency * np.asarray(t))) \
        ** params.gamma_w


def _unit_waveform(u: float, gamma: float) -> float:
    # in u = t * flicker_frequency units the waveform has period exactly 1
    return abs(math.sin(math.pi * u)) ** gamma


class _ExposureIntegrator:
    """Antiderivative of the unit-period waveform, built from quadrature."""

    def __init__(self, gamma: float):
        self.gamma = gamma
        self.full_period = quad(_unit_waveform, 0.0, 1.0, args=(gamma,),
                                **_QUAD_OPTS)[0]
        self._partials: dict[float, float] = {}

    def _partial(self, frac: float) -> float:
        key = round(frac, 12)
        if key not in self._partials:
            self._partials[key] = quad(_unit_waveform, 0.0, frac,
                                       args=(self.gamma,), **_QUAD_OPTS)[0]
        return self._partials[key]

    def antiderivative(self, u: float) -> float:
        base = math.floor(u)
        return base * self.full_period + self._partial(u - base)

    def window_mean(self, u0: float, du: float) -> float:
        return (self.antiderivative(u0 + du) - self.antiderivative(u0)) / du


def row_attenuation(params: FlickerParams, n_rows: int, phase: float) -> np.ndarray:
    """Per-row gain for one frame; phase is the flicker phase at row 0.

    Each row averages the waveform over its exposure window, the result is
    normalized by the whole-period mean and clamped to [min_gain, 1].  An
    exposure spanning an integer number of flicker periods is stripe-free.
    """
    integ = _ExposureIntegrator(params.gamma_w)
    f_fl = params.flicker_frequency
    du_exposure = f_fl * params.exposure_time
    du_row = f_fl * params.row_readout_time
    u_start = phase / (2.0 * np.pi)
    gains = np.empty(n_rows)
    for r in range(n_rows):
        raw = integ.window_mean(u_start + r * du_row, du_exposure)
        gains[r] = raw / integ.full_period
    return np.clip(gains, params.min_gain, 1.0)


@dataclass(frozen=True)
class BurstTriplet:
    """Three flickered frames of one static scene, plus ground truth."""

    frames: tuple[np.ndarray, np.ndarray, np.ndarray]
    clean: np.ndarray
    gains: np.ndarray  # (3, rows along the stripe axis)


def synth_burst(clean: np.ndarray, params: FlickerParams, seed: int = 0,
                noise_sigma: float = 0.0) -> BurstTriplet:
    """Apply per-frame flicker to a clean [0, 1] image.

    The scene is static; only the flicker phase changes between frames.
    Vertical orientation runs the same synthesis across columns.  Read
    noise is additive Gaussian, off by default.
    """
    clean = np.asarray(clean, dtype=np.float64)
    if clean.ndim != 3 or clean.shape[2] != 3:
        raise ValueError(f"clean image must be (H, W, 3), got {clean.shape}")
    if not (clean.min() >= 0.0 and clean.max() <= 1.0):
        raise ValueError("clean image values must lie in [0, 1]")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")

    if params.orientation == "vertical":
        base = synth_burst(np.ascontiguousarray(clean.transpose(1, 0, 2)),
                           replace(params, orientation="horizontal"),
                           seed, noise_sigma)
        frames = tuple(np.ascontiguousarray(f.transpose(1, 0, 2))
                       for f in base.frames)
        return BurstTriplet(frames, clean, base.gains)

    n_rows = clean.shape[0]
    rng = np.random.default_rng(seed)
    gains = np.stack([row_attenuation(params, n_rows, p)
                      for p in params.phase_offsets])
    frames = []
    for g in gains:
        frame = np.clip(clean * g[:, None, None], 0.0, 1.0)
        if noise_sigma > 0:
            frame = np.clip(frame + rng.normal(0.0, noise_sigma,
                                               size=frame.shape), 0.0, 1.0)
        frames.append(frame)
    return BurstTriplet(tuple(frames), clean, gains)


def sample_scene(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Smooth procedural test scene: gradients plus a few soft blobs."""
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.linspace(0, 1, height), np.linspace(0, 1, width),
                         indexing="ij")
    img = np.empty((height, width, 3))
    for c in range(3):
        a, b = rng.uniform(0.2, 0.8, size=2)
        img[:, :, c] = a * xx + (1 - a) * (1 - yy) * b + 0.15
        for _ in range(3):
            cy, cx = rng.uniform(0.1, 0.9, size=2)
            rad = rng.uniform(0.08, 0.25)
            amp = rng.uniform(-0.25, 0.35)
            img[:, :, c] += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2)
                                         / (2 * rad * rad))
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo) * 0.85 + 0.05
