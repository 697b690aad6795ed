"""Sensor geometry, rolling-shutter timing, exposure schedules and the
optical projection of lens/body motion into pixels."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, RangeError, TimingError

__all__ = [
    "SensorGeometry",
    "ShutterTiming",
    "ShutterSchedule",
    "PRESETS",
    "preset",
    "captured_fraction",
    "pixel_displacement",
    "px_per_um",
    "z_scale",
    "moving_mean_response",
    "make_schedule",
]

_INT_TOL = 1e-6


def _as_int_ratio(a: float, b: float, what: str) -> int:
    r = a / b
    n = int(round(r))
    if n < 1 or abs(r - n) > _INT_TOL * max(1.0, r):
        raise ConfigurationError(f"{what} must be a positive integer multiple of the step "
                                 f"(ratio {r:.9g})")
    return n


@dataclass(frozen=True)
class SensorGeometry:
    """Pixel array and optics. ``sensor_width`` is the physical X extent in mm."""

    rows: int
    cols: int
    sensor_width: float = 5.544
    focal_length: float = 5.0
    distance: float = 100.0

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ConfigurationError("sensor needs at least 2 rows and 2 columns")
        if min(self.sensor_width, self.focal_length, self.distance) <= 0:
            raise ConfigurationError("sensor width, focal length and distance must be positive")
        if self.distance <= self.focal_length:
            raise ConfigurationError("scene distance must exceed the focal length")


@dataclass(frozen=True)
class ShutterTiming:
    """Per-row exposure ``exposure`` (s), row readout interval ``row_readout`` (s),
    frame rate ``frame_rate`` (Hz). The simulation step is row_readout / delta_div."""

    exposure: float
    row_readout: float
    frame_rate: float
    delta_div: int = 4

    def __post_init__(self):
        if min(self.exposure, self.row_readout, self.frame_rate) <= 0:
            raise ConfigurationError("exposure, row readout and frame rate must be positive")
        if int(self.delta_div) != self.delta_div or self.delta_div < 1:
            raise ConfigurationError("delta_div must be an integer >= 1")
        _as_int_ratio(self.exposure, self.step, "exposure time")

    @classmethod
    def from_rates(cls, exposure: float, row_rate: float, frame_rate: float,
                   delta_div: int = 4) -> "ShutterTiming":
        """Build from the row readout *rate* 1/T_r in Hz."""
        return cls(exposure, 1.0 / row_rate, frame_rate, delta_div)

    @property
    def step(self) -> float:
        return self.row_readout / self.delta_div

    @property
    def steps_per_row(self) -> int:
        return int(self.delta_div)

    @property
    def exposure_steps(self) -> int:
        """L = T_e / step; an exposure window spans L + 1 samples (both ends)."""
        return _as_int_ratio(self.exposure, self.step, "exposure time")

    @property
    def row_rate(self) -> float:
        return 1.0 / self.row_readout

    def frame_start(self, k: int) -> float:
        return k / self.frame_rate

    def frame_start_step(self, k: int) -> int:
        """Frame start rounded to the simulation grid."""
        return int(round(k / (self.frame_rate * self.step)))

    def frame_span(self, rows: int) -> float:
        """Time from the first row's exposure start to the last row's exposure end."""
        return (rows - 1) * self.row_readout + self.exposure

    def check(self, rows: int) -> None:
        if rows * self.row_readout > 1.0 / self.frame_rate * (1 + 1e-12):
            raise TimingError(f"{rows} rows x T_r = {rows * self.row_readout:.6g} s exceeds "
                              f"the frame period {1 / self.frame_rate:.6g} s")


def captured_fraction(timing: ShutterTiming, rows: int) -> float:
    """Fraction of continuous time covered by row readouts: f_v * M * T_r."""
    eta = timing.frame_rate * rows * timing.row_readout
    if eta > 1.0 + 1e-12:
        raise TimingError(f"captured fraction {eta:.4f} > 1: inconsistent timing")
    return float(min(eta, 1.0))


# Row readout rate (Hz) and frame rate (fps) of
# ten phone rear cameras; geometry fields are shared 1080p defaults.
PRESETS = {
    "pixel1": dict(row_rate=45000, fps=30),
    "pixel2": dict(row_rate=34000, fps=30),
    "pixel3": dict(row_rate=34000, fps=30),
    "pixel5": dict(row_rate=58000, fps=30),
    "galaxy_s7": dict(row_rate=45000, fps=30),
    "galaxy_s8plus": dict(row_rate=45000, fps=30),
    "galaxy_s20plus": dict(row_rate=58000, fps=30),
    "iphone7": dict(row_rate=92000, fps=60),
    "iphone8plus": dict(row_rate=92000, fps=60),
    "iphone12pro": dict(row_rate=160000, fps=60),
}


def preset(name: str, exposure: float = 1e-3, rows: int = 1080, cols: int = 1920,
           delta_div: int = 4):
    """Return ``(SensorGeometry, ShutterTiming)`` for a named phone preset."""
    try:
        p = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown camera preset {name!r}; "
                                 f"choose from {sorted(PRESETS)}") from None
    geom = SensorGeometry(rows, cols)
    timing = ShutterTiming.from_rates(exposure, p["row_rate"], p["fps"], delta_div)
    return geom, timing


def px_per_um(geom: SensorGeometry, mode: str = "lens") -> float:
    """Pixel displacement per micrometre of lens (or body) motion."""
    ratio = geom.focal_length / geom.distance
    if mode == "lens":
        gain = 1.0 + ratio
    elif mode == "body":
        gain = ratio
    else:
        raise RangeError(f"mode must be 'lens' or 'body', got {mode!r}")
    return gain * geom.cols / (geom.sensor_width * 1000.0)


def pixel_displacement(geom: SensorGeometry, amplitude_um: float, mode: str = "lens") -> float:
    """Image-plane displacement in pixels for lens or body motion of ``amplitude_um``."""
    if amplitude_um < 0:
        raise RangeError("amplitude must be non-negative")
    return amplitude_um * px_per_um(geom, mode)


def z_scale(geom: SensorGeometry, z_um):
    """Image scale factor d / (d - A_z) for axial lens motion ``z_um``."""
    return geom.distance / (geom.distance - np.asarray(z_um, dtype=float) * 1e-3)


def moving_mean_response(exposure: float, step: float, freq) -> np.ndarray | float:
    """|H| of the L-point moving mean, L = exposure / step, at ``freq`` Hz."""
    L = _as_int_ratio(exposure, step, "exposure time")
    f = np.asarray(freq, dtype=float)
    if np.any(f < 0) or np.any(f > 0.5 / step * (1 + 1e-12)):
        raise RangeError("frequency must lie in [0, 1 / (2 step)]")
    w = 2 * np.pi * f * step
    den = L * np.sin(w / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        h = np.abs(np.sin(w * L / 2) / den)
    h = np.where(np.abs(den) < 1e-300, 1.0, np.minimum(h, 1.0))
    return float(h) if h.ndim == 0 else h


@dataclass(frozen=True)
class ShutterSchedule:
    """Per-frame row exposure order.

    ``order(k)[p]`` is the row exposed at readout position ``p`` of frame
    ``k``. Random-coded permutations come from a Philox counter-based
    generator keyed by ``(seed, k)``, so any frame can be generated on its
    own and the result never depends on evaluation order.
    """

    rows: int
    mode: str = "sequential"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("sequential", "random-coded"):
            raise RangeError(f"unknown schedule mode {self.mode!r}")
        if self.rows < 1:
            raise RangeError("rows must be positive")

    def order(self, k: int) -> np.ndarray:
        if self.mode == "sequential":
            return np.arange(self.rows)
        return _random_order(self.rows, int(self.seed), int(k)).copy()

    def positions(self, k: int) -> np.ndarray:
        """Inverse of :meth:`order`: readout position of each row."""
        order = self.order(k)
        pos = np.empty_like(order)
        pos[order] = np.arange(self.rows)
        return pos


@lru_cache(maxsize=256)
def _random_order(rows: int, seed: int, k: int) -> np.ndarray:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, k])
    rng = np.random.Generator(np.random.Philox(ss))
    perm = rng.permutation(rows)
    perm.setflags(write=False)
    return perm


def make_schedule(timing: ShutterTiming, rows: int, mode: str = "sequential",
                  seed: int = 0) -> ShutterSchedule:
    timing.check(rows)
    return ShutterSchedule(rows, mode, seed)
