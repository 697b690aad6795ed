"""Signal recovery: the analytical row-system oracle, channel preprocessing
and assembly of channels into audio."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, optimize
from scipy import signal as sps

from .camera import ShutterSchedule, ShutterTiming
from .errors import CoverageError, InputError, RangeError, UnderdeterminedError
from .registration import ChannelSet
from .renderer import PixelMotion, exposure_window
from .signal import AudioSignal, resample

__all__ = [
    "RowViewBank",
    "RecoveredSignal",
    "PreprocessConfig",
    "solve_row_system",
    "synthetic_motion",
    "exposure_mean_oracle",
    "ideal_channels",
    "spectral_subtract",
    "detect_activity",
    "lowpass",
    "normalize",
    "preprocess",
    "channels_to_audio",
    "gap_length",
    "fill_gaps",
]


@dataclass(frozen=True)
class RowViewBank:
    """All integer translations j in [-J, J] of one scene row.

    ``row`` may carry ``margin`` extra pixels on both sides (as a scene row
    does); view j at column c reads ``row[margin + c - j]``, clamped at the
    ends.  With ``margin = 0`` the views are edge-clamped shifts.
    """

    row: np.ndarray
    J: int
    margin: int = 0

    def __post_init__(self):
        row = np.asarray(self.row, dtype=float)
        if row.ndim != 1 or len(row) <= 2 * self.margin:
            raise InputError("row must be 1-D and longer than twice the margin")
        if self.J < 0:
            raise RangeError("J must be non-negative")
        object.__setattr__(self, "row", row)

    @property
    def width(self) -> int:
        return len(self.row) - 2 * self.margin

    @property
    def shifts(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    @property
    def matrix(self) -> np.ndarray:
        """(N, 2J + 1) matrix whose column ``j + J`` is the view shifted by j."""
        c = self.margin + np.arange(self.width)[:, None] - self.shifts[None, :]
        return self.row[np.clip(c, 0, len(self.row) - 1)]


def solve_row_system(bank: RowViewBank, observed_row, L: int, weight: float = 1e4) -> np.ndarray:
    """Non-negative view counts x with sum L that best explain ``observed_row``.

    Minimises ``||R x / L - observed||`` subject to ``x >= 0`` and
    ``sum(x) = L``; the equality is enforced as a heavily weighted extra row
    of a non-negative least-squares problem.
    """
    R = bank.matrix
    obs = np.asarray(observed_row, dtype=float)
    if obs.shape != (bank.width,):
        raise InputError(f"observed row has {obs.size} samples, bank expects {bank.width}")
    if L < 1:
        raise RangeError("L must be >= 1")
    if np.linalg.matrix_rank(R) < R.shape[1]:
        raise UnderdeterminedError("translated views are linearly dependent "
                                   "(row lacks texture or is too short for the shift range)")
    A = np.vstack([R / L, np.full((1, R.shape[1]), weight)])
    b = np.concatenate([obs, [weight * L]])
    x, _ = optimize.nnls(A, b, maxiter=50 * A.shape[1])
    return x


def synthetic_motion(x, shifts=None) -> float:
    """Count-weighted mean shift sum(j x_j) / sum(x_j).

    ``x`` is indexed by ``shifts`` (default: symmetric range -J..J).
    """
    x = np.asarray(x, dtype=float)
    total = x.sum()
    if total <= 0:
        raise ZeroDivisionError("coefficient vector sums to zero")
    if shifts is None:
        J = (len(x) - 1) // 2
        shifts = np.arange(-J, J + 1)
    return float(np.dot(shifts, x) / total)


def exposure_mean_oracle(motion, timing: ShutterTiming, schedule: ShutterSchedule,
                         row: int, k: int) -> float:
    """Mean of the motion samples inside row ``row``'s exposure window in frame ``k``."""
    s = motion.x if isinstance(motion, PixelMotion) else np.asarray(motion, dtype=float)
    pos = int(schedule.positions(k)[row])
    n0, n1 = exposure_window(timing, k, pos)
    if n0 < 0 or n1 >= len(s):
        raise CoverageError(f"motion does not cover samples {n0}..{n1}")
    return float(np.sum(s[n0:n1 + 1]) / (n1 - n0 + 1))


def ideal_channels(motion: PixelMotion, timing: ShutterTiming, schedule: ShutterSchedule,
                   rows: int, K: int) -> ChannelSet:
    """Noise-free stand-in for registration: per-row exposure means of the motion.

    Produces a one-group ChannelSet (X then Y) laid out exactly like
    :func:`channels_from_video` output, in row order.
    """
    L = timing.exposure_steps
    kernel = np.ones(L + 1) / (L + 1)
    mx = np.convolve(motion.x, kernel, mode="valid")
    my = np.convolve(motion.y, kernel, mode="valid")
    xs, ys = [], []
    for k in range(K):
        n0 = timing.frame_start_step(k) + schedule.positions(k) * timing.steps_per_row
        if n0.max() >= len(mx):
            raise CoverageError(f"motion does not cover frame {k}")
        xs.append(mx[n0])
        ys.append(my[n0])
    data = np.vstack([np.concatenate(xs), np.concatenate(ys)])
    return ChannelSet(data, 1, rows, timing)


@dataclass
class RecoveredSignal:
    samples: np.ndarray
    sample_rate: float
    frame_starts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    provenance: dict = field(default_factory=dict)
    empty: bool = False

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class PreprocessConfig:
    denoise: bool = True
    liveness: bool = True
    trim: bool = True
    lowpass: bool = True
    normalize: bool = True
    noise_seconds: float = 0.25
    stft_window: int = 1024
    stft_hop: int = 256
    oversubtract: float = 2.0
    liveness_k: float = 3.0
    liveness_window: float = 0.01
    hysteresis: float = 0.05
    rel_floor: float = 1e-4
    cutoff: float = 4000.0
    fir_taps: int = 129


def spectral_subtract(x, rate, noise_seconds=0.25, window=1024, hop=256,
                      oversubtract=2.0) -> np.ndarray:
    """Magnitude spectral subtraction with a noise profile from the leading segment.

    The noise magnitude is the mean STFT magnitude over frames lying in the
    first ``noise_seconds``; each frame's magnitude is reduced by
    ``oversubtract`` times it and floored at zero, then resynthesised with
    the original phase.  Over-subtraction suppresses the residual peaks a
    mean profile leaves behind in random noise.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    window = int(min(window, n))
    hop = int(min(hop, max(1, window // 4)))
    if window < 16:
        return x.copy()
    f, t, Z = sps.stft(x, fs=rate, window="hann", nperseg=window, noverlap=window - hop,
                       boundary="even", padded=True)
    noise_frames = t + 0.5 * window / rate <= max(noise_seconds, window / rate) + 1e-12
    noise_frames[0] = True
    profile = np.abs(Z[:, noise_frames]).mean(axis=1, keepdims=True)
    mag = np.maximum(np.abs(Z) - oversubtract * profile, 0.0)
    Zc = mag * np.exp(1j * np.angle(Z))
    _, y = sps.istft(Zc, fs=rate, window="hann", nperseg=window, noverlap=window - hop,
                     boundary=True)
    return y[:n]


def _short_time_energy(x, rate, window):
    w = max(1, int(round(window * rate)))
    return ndimage.uniform_filter1d(x * x, w, mode="nearest")


def _runs(mask):
    d = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    return np.nonzero(d == 1)[0], np.nonzero(d == -1)[0]


def detect_activity(x, rate, noise_seconds=0.25, k=3.0, window=0.01, hysteresis=0.05,
                    rel_floor=1e-4):
    """Return ``(start, end)`` sample indices of the active region, or None.

    Short-time energy is compared against ``k`` times the median energy of
    the leading noise segment (never below ``rel_floor`` times the peak
    energy, which keeps noiseless input well-defined).  Inactive gaps and
    active bursts shorter than ``hysteresis`` seconds are absorbed.
    """
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return None
    e = _short_time_energy(x, rate, window)
    peak = e.max()
    if peak <= 0:
        return None
    n_noise = max(1, int(round(noise_seconds * rate)))
    thr = max(k * float(np.median(e[:n_noise])), rel_floor * peak)
    active = e > thr
    h = int(round(hysteresis * rate))
    starts, ends = _runs(~active)
    for s, t in zip(starts, ends):
        if 0 < s and t < len(active) and t - s < h:
            active[s:t] = True
    starts, ends = _runs(active)
    for s, t in zip(starts, ends):
        if t - s < h:
            active[s:t] = False
    idx = np.nonzero(active)[0]
    if len(idx) == 0:
        return None
    return int(idx[0]), int(idx[-1]) + 1


def lowpass(x, rate, cutoff=4000.0, taps=129) -> np.ndarray:
    """Zero-delay windowed-sinc FIR low-pass; identity when rate <= 2 * cutoff."""
    x = np.asarray(x, dtype=float)
    if rate <= 2 * cutoff:
        return x.copy()
    h = sps.firwin(taps, cutoff, fs=rate)
    if len(x) < taps:
        return np.convolve(x, h, mode="full")[taps // 2: taps // 2 + len(x)]
    return np.convolve(x, h, mode="same")


def normalize(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    peak = np.max(np.abs(x)) if len(x) else 0.0
    return x / peak if peak > 0 else x.copy()


def preprocess(channels: ChannelSet, cfg: PreprocessConfig = PreprocessConfig()
               ) -> list[RecoveredSignal]:
    """Denoise, detect activity, trim, low-pass and normalise every channel."""
    data = np.asarray(channels.data, dtype=float)
    if data.size == 0:
        raise InputError("no channel data")
    rate = channels.sample_rate
    stages = []
    if cfg.denoise:
        data = np.array([spectral_subtract(c, rate, cfg.noise_seconds, cfg.stft_window,
                                           cfg.stft_hop, cfg.oversubtract) for c in data])
        stages.append("denoise")

    bounds = None
    empty = False
    if cfg.liveness:
        found = [detect_activity(c, rate, cfg.noise_seconds, cfg.liveness_k,
                                 cfg.liveness_window, cfg.hysteresis, cfg.rel_floor)
                 for c in data]
        found = [f for f in found if f is not None]
        stages.append("liveness")
        if found:
            bounds = (int(round(np.mean([f[0] for f in found]))),
                      int(round(np.mean([f[1] for f in found]))))
        else:
            empty = True

    starts = channels.frame_starts
    if cfg.trim and bounds is not None:
        s, e = bounds
        data = data[:, s:e]
        starts = starts[(starts > s) & (starts < e)] - s
        stages.append("trim")
    if cfg.lowpass:
        data = np.array([lowpass(c, rate, cfg.cutoff, cfg.fir_taps) for c in data])
        stages.append("lowpass")
    if cfg.normalize:
        data = np.array([normalize(c) for c in data])
        stages.append("normalize")

    names = channels.names()
    out = []
    for i, c in enumerate(data):
        prov = {"channel": names[i], "stages": list(stages), "active": bounds}
        out.append(RecoveredSignal(c, rate, np.asarray(starts, dtype=int), prov, empty))
    return out


def gap_length(timing: ShutterTiming, rows: int) -> int:
    """Samples lost between consecutive frames: round((1/f_v - M T_r) / T_r)."""
    return int(round((1.0 / timing.frame_rate - rows * timing.row_readout) / timing.row_readout))


def fill_gaps(x, frame_starts, gap: int) -> np.ndarray:
    """Insert ``gap`` zeros before every frame start inside ``x`` (along the last axis)."""
    x = np.asarray(x, dtype=float)
    pieces = []
    prev = 0
    for b in frame_starts:
        if 0 < b < x.shape[-1]:
            pieces += [x[..., prev:b], np.zeros(x.shape[:-1] + (gap,))]
            prev = b
    pieces.append(x[..., prev:])
    return np.concatenate(pieces, axis=-1)


def channels_to_audio(signals, gap_policy: str = "drop", target_rate: float | None = None,
                      timing: ShutterTiming | None = None, rows: int | None = None,
                      select: int | None = None) -> AudioSignal:
    """Mix recovered channels (mean, or one ``select``-ed channel) into audio.

    ``gap_policy="zero-fill"`` restores the true time base by inserting
    ``round((1/f_v - M T_r) / T_r)`` zeros at each frame boundary (needs
    ``timing`` and ``rows``).
    """
    if isinstance(signals, RecoveredSignal):
        signals = [signals]
    signals = list(signals)
    if not signals:
        raise InputError("at least one channel is required")
    lengths = {len(s) for s in signals}
    if len(lengths) != 1:
        raise InputError("channels differ in length")
    if select is not None:
        mix = np.asarray(signals[select].samples, dtype=float)
    else:
        mix = np.mean([s.samples for s in signals], axis=0)
    rate = signals[0].sample_rate

    if gap_policy == "zero-fill":
        if timing is None or rows is None:
            raise InputError("zero-fill needs the shutter timing and row count")
        mix = fill_gaps(mix, signals[0].frame_starts, gap_length(timing, rows))
    elif gap_policy != "drop":
        raise RangeError(f"unknown gap policy {gap_policy!r}")

    if target_rate is None or target_rate == rate:
        return AudioSignal(mix, rate)
    return AudioSignal(resample(mix, rate, target_rate), target_rate)
