"""Test audio synthesis and the speaker -> structure -> lens mechanical path.

The mechanical subpath is not modelled from first principles; it is a
user-configured transfer function (flat gain or a tabulated response)
scaled by sound pressure level and hard-clipped at the lens stroke limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from .errors import InputError, RangeError, SingularityError

__all__ = [
    "AudioSignal",
    "MechanicalPath",
    "LensMotion",
    "synth_tone",
    "synth_chirp",
    "lens_amplitude_from_energy",
    "spl_to_amplitude",
    "audio_to_lens_motion",
    "resample",
    "brickwall_table",
]


@dataclass(frozen=True)
class AudioSignal:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise InputError("audio must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise InputError("audio contains non-finite samples")
        if not self.sample_rate > 0:
            raise RangeError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class MechanicalPath:
    """Lens displacement (um) per unit audio amplitude at ``spl_ref`` dB.

    ``mode`` is ``"flat"`` or ``"table"``. In table mode ``response_table``
    holds ``(frequency_hz, gain_um)`` pairs with strictly increasing
    frequencies; gains between entries are linearly interpolated and held
    constant beyond the ends.
    """

    mode: str = "flat"
    flat_gain: float = 2.24
    response_table: tuple = ()
    stroke_limit: float = 100.0
    spl_ref: float = 58.0

    def __post_init__(self):
        if self.mode not in ("flat", "table"):
            raise RangeError(f"unknown mechanical path mode {self.mode!r}")
        if not self.stroke_limit > 0:
            raise RangeError("stroke_limit must be positive")
        if self.flat_gain < 0:
            raise RangeError("flat_gain must be non-negative")
        table = tuple((float(f), float(g)) for f, g in self.response_table)
        if self.mode == "table" and len(table) < 1:
            raise RangeError("table mode needs at least one (frequency, gain) pair")
        freqs = [f for f, _ in table]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise RangeError("response_table frequencies must be strictly increasing")
        if any(g < 0 for _, g in table):
            raise RangeError("response_table gains must be non-negative")
        object.__setattr__(self, "response_table", table)

    @property
    def reference_gain(self) -> float:
        """Peak gain of the path, used for the SPL scaling law."""
        if self.mode == "flat":
            return self.flat_gain
        return max(g for _, g in self.response_table)

    def gain_at(self, freqs) -> np.ndarray:
        freqs = np.abs(np.asarray(freqs, dtype=float))
        if self.mode == "flat":
            return np.full_like(freqs, self.flat_gain)
        f, g = np.array(self.response_table).T
        return np.interp(freqs, f, g)


def brickwall_table(cutoff: float = 600.0, gain: float = 2.24, width: float = 1.0) -> tuple:
    """Response table that passes ``gain`` up to ``cutoff`` and zero above."""
    return ((0.0, gain), (cutoff, gain), (cutoff + width, 0.0))


@dataclass(frozen=True)
class LensMotion:
    """Three-axis lens displacement in micrometres, sampled every ``step`` s."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    step: float
    stroke_limit: float = field(default=np.inf)

    def __post_init__(self):
        axes = [np.asarray(a, dtype=float) for a in (self.x, self.y, self.z)]
        if len({a.shape for a in axes}) != 1 or axes[0].ndim != 1:
            raise InputError("x, y, z must be 1-D and of equal length")
        if not self.step > 0:
            raise RangeError("step must be positive")
        for name, a in zip("xyz", axes):
            object.__setattr__(self, name, a)

    def __len__(self):
        return len(self.x)

    @classmethod
    def zeros(cls, n: int, step: float) -> "LensMotion":
        z = np.zeros(n)
        return cls(z, z.copy(), z.copy(), step)


def synth_tone(freq: float, duration: float, rate: float, amplitude: float = 1.0,
               phase: float = 0.0) -> AudioSignal:
    """Pure sinusoid ``amplitude * sin(2 pi freq t + phase)``."""
    if not 0 < freq < rate / 2:
        raise RangeError(f"tone frequency {freq} Hz must lie in (0, {rate / 2}) Hz")
    if duration <= 0:
        raise RangeError("duration must be positive")
    n = int(round(duration * rate))
    t = np.arange(n) / rate
    return AudioSignal(amplitude * np.sin(2 * np.pi * freq * t + phase), rate)


def synth_chirp(f0: float, f1: float, duration: float, rate: float,
                amplitude: float = 1.0) -> AudioSignal:
    """Linear sweep whose instantaneous frequency runs from f0 to f1."""
    if not 0 < f0 < f1 < rate / 2:
        raise RangeError(f"chirp needs 0 < f0 < f1 < {rate / 2}, got {f0}, {f1}")
    if duration <= 0:
        raise RangeError("duration must be positive")
    n = int(round(duration * rate))
    t = np.arange(n) / rate
    k = (f1 - f0) / duration
    return AudioSignal(amplitude * np.sin(2 * np.pi * (f0 * t + 0.5 * k * t * t)), rate)


def lens_amplitude_from_energy(E_s: float, k0: float, k1: float, c_l: float) -> float:
    """Lens amplitude in um from speaker energy (J) and spring constant (N/m).

    ``k0 * E_s`` reaches the phone body and ``k1`` of that is stored in the
    lens suspension: ``k1 k0 E_s = c_l A^2 / 2``.
    """
    if c_l == 0:
        raise SingularityError("spring constant c_l is zero")
    if min(E_s, k0, k1) < 0 or c_l < 0:
        raise RangeError("energy, coupling factors and c_l must be non-negative")
    return float(np.sqrt(2.0 * k1 * k0 * E_s / c_l)) * 1e6


def _unclipped_amplitude(spl: float, path: MechanicalPath) -> float:
    return path.reference_gain * 10.0 ** ((spl - path.spl_ref) / 20.0)


def spl_to_amplitude(spl: float, path: MechanicalPath) -> float:
    """Lens amplitude (um) at sound pressure level ``spl`` dB, stroke-clipped."""
    return min(_unclipped_amplitude(spl, path), path.stroke_limit)


def resample(x: np.ndarray, old_rate: float, new_rate: float) -> np.ndarray:
    """Band-limited resampling with anti-aliasing at min(old, new) / 2.

    Polyphase filtering when the rate ratio is a small rational, FFT
    resampling otherwise.
    """
    x = np.asarray(x, dtype=float)
    if old_rate == new_rate:
        return x.copy()
    ratio = new_rate / old_rate
    frac = Fraction(ratio).limit_denominator(1000)
    if abs(float(frac) - ratio) <= 1e-12 * ratio:
        return sps.resample_poly(x, frac.numerator, frac.denominator)
    n_out = int(round(len(x) * ratio))
    return sps.resample(x, n_out)


def audio_to_lens_motion(audio: AudioSignal, path: MechanicalPath, spl: float,
                         axis_mix=(1.0, 0.0, 0.0), step: float = 1 / 136000) -> LensMotion:
    """Convert audio into a clipped three-axis lens displacement trace."""
    if len(audio) == 0:
        raise InputError("audio is empty")
    if not step > 0:
        raise RangeError("step must be positive")
    weights = np.asarray(axis_mix, dtype=float)
    if weights.shape != (3,) or np.any(weights < 0) or weights.sum() > 3 + 1e-12:
        raise RangeError("axis_mix must be three non-negative weights summing to <= 3")

    rate = 1.0 / step
    x = resample(audio.samples, audio.sample_rate, rate)
    if path.mode == "table":
        spectrum = np.fft.rfft(x)
        freqs = np.fft.rfftfreq(len(x), d=step)
        x = np.fft.irfft(spectrum * path.gain_at(freqs), n=len(x))
    else:
        x = x * path.flat_gain
    x = x * 10.0 ** ((spl - path.spl_ref) / 20.0)

    lim = path.stroke_limit
    axes = [np.clip(w * x, -lim, lim) for w in weights]
    return LensMotion(*axes, step=step, stroke_limit=lim)
