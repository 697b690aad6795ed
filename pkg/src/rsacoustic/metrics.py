"""Recovery-quality measures: SNR, spectrograms, frequency tracking,
captured-fraction measurement and the empirical adversary advantage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import signal as sps

from .errors import InputError, MaskError, RangeError
from .recovery import detect_activity

__all__ = [
    "MetricsReport",
    "FrequencyTrack",
    "EtaCap",
    "snr_db",
    "spectrogram",
    "dominant_freq_track",
    "dominant_frequency",
    "peak_to_background_db",
    "band_snr_db",
    "tone_amplitude",
    "peak_amplitude",
    "measure_eta_cap",
    "adversary_advantage",
    "xcorr_score",
]

EPS = 1e-12


def snr_db(x, active_mask) -> float:
    """Simplified speech-to-noise ratio in dB.

    Noise power comes from the inactive samples; the estimated signal power
    is the active power minus the noise power, floored at ``EPS``.
    """
    x = np.asarray(x, dtype=float)
    mask = np.asarray(active_mask, dtype=bool)
    if mask.shape != x.shape:
        raise InputError("mask and signal differ in shape")
    if mask.all() or not mask.any():
        raise MaskError("mask must contain both active and inactive samples")
    p_noise = float(np.mean(x[~mask] ** 2))
    p_active = float(np.mean(x[mask] ** 2))
    if p_noise == 0.0:
        return float("inf")
    return 10.0 * np.log10(max(p_active - p_noise, EPS) / p_noise)


def spectrogram(x, window: int = 1024, hop: int = 256, rate: float = 1.0):
    """Hann-windowed STFT magnitudes.

    Returns ``(mag, freqs, times)`` with ``mag`` shaped (freq bins, frames);
    ``times`` are frame centres in seconds.
    """
    x = np.asarray(x, dtype=float)
    if window < 16 or hop < 1:
        raise RangeError("window must be >= 16 samples and hop >= 1")
    if len(x) < window:
        raise InputError(f"signal of {len(x)} samples is shorter than the window ({window})")
    frames = np.lib.stride_tricks.sliding_window_view(x, window)[::hop]
    w = sps.get_window("hann", window)
    mag = np.abs(np.fft.rfft(frames * w, axis=1)).T
    freqs = np.fft.rfftfreq(window, 1.0 / rate)
    times = (np.arange(frames.shape[0]) * hop + window / 2) / rate
    return mag, freqs, times


class FrequencyTrack(NamedTuple):
    times: np.ndarray
    freqs: np.ndarray
    dominant: float

    @property
    def max(self) -> float:
        return float(self.freqs.max())


def dominant_freq_track(x, rate: float, window: int = 4096, hop: int = 1024,
                        fmin: float = 0.0, min_rel_db: float | None = None) -> FrequencyTrack:
    """Per-frame argmax frequency and its mode.

    Bins below ``fmin`` are ignored.  With ``min_rel_db`` set, frames whose
    peak magnitude is more than that many dB under the strongest frame's
    peak are dropped from the track.
    """
    mag, freqs, times = spectrogram(x, window, hop, rate)
    keep_bins = freqs >= fmin
    sub = mag[keep_bins]
    idx = sub.argmax(axis=0)
    track = freqs[keep_bins][idx]
    if min_rel_db is not None:
        peaks = sub.max(axis=0)
        ok = peaks >= peaks.max() * 10 ** (-min_rel_db / 20)
        track, times = track[ok], times[ok]
    vals, counts = np.unique(track, return_counts=True)
    return FrequencyTrack(times, track, float(vals[counts.argmax()]))


def _power_spectrum(x, rate, pad=1):
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    w = sps.get_window("hann", len(x))
    n = int(pad * len(x))
    p = np.abs(np.fft.rfft(x * w, n=n)) ** 2
    return p, np.fft.rfftfreq(n, 1.0 / rate)


def dominant_frequency(x, rate: float, fmin: float = 1.0, fmax: float | None = None,
                       pad: int = 4) -> float:
    """Frequency of the largest Hann-windowed spectral peak in [fmin, fmax]."""
    p, f = _power_spectrum(x, rate, pad)
    band = f >= fmin
    if fmax is not None:
        band &= f <= fmax
    return float(f[band][p[band].argmax()])


def peak_to_background_db(x, rate: float, freq: float, band=(20.0, 4000.0),
                          halfwidth: float | None = None) -> float:
    """Tone power at ``freq`` over the median background power in ``band``, in dB.

    The tone power is the largest bin within ``halfwidth`` Hz of ``freq``
    (default: 1.5 bins); bins within three times that are excluded from
    the background.
    """
    p, f = _power_spectrum(x, rate)
    df = f[1] - f[0]
    hw = 1.5 * df if halfwidth is None else halfwidth
    near = np.abs(f - freq) <= hw
    far = (f >= band[0]) & (f <= band[1]) & (np.abs(f - freq) > 3 * hw)
    if not near.any() or not far.any():
        raise InputError("signal too short to separate tone and background")
    bg = float(np.median(p[far]))
    peak = float(p[near].max())
    if bg <= 0:
        return float("inf") if peak > 0 else float("nan")
    return 10.0 * np.log10(max(peak, EPS * bg) / bg)


def band_snr_db(x, rate: float, freq: float, halfwidth: float, band=(20.0, 4000.0)) -> float:
    """Tone-band power over the background expected in the same band, in dB.

    Sums the power of every bin within ``halfwidth`` Hz of ``freq`` (so a
    tone smeared into sidebands still counts in full) and divides by the
    median background bin power in ``band`` times that bin count.  Bins
    within ``2 * halfwidth`` of ``freq`` are excluded from the background.
    """
    p, f = _power_spectrum(x, rate)
    near = np.abs(f - freq) <= halfwidth
    far = (f >= band[0]) & (f <= band[1]) & (np.abs(f - freq) > 2 * halfwidth)
    if not near.any() or not far.any():
        raise InputError("signal too short to separate tone and background")
    bg = float(np.median(p[far])) * int(near.sum())
    peak = float(p[near].sum())
    if bg <= 0:
        return float("inf") if peak > 0 else float("nan")
    return 10.0 * np.log10(max(peak, EPS * bg) / bg)


def tone_amplitude(x, times, freq: float) -> float:
    """Amplitude of the least-squares sinusoid at ``freq`` sampled at ``times``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(times, dtype=float)
    w = 2 * np.pi * freq * t
    A = np.column_stack([np.sin(w), np.cos(w), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, x, rcond=None)
    return float(np.hypot(coef[0], coef[1]))


def peak_amplitude(x, q: float = 0.5) -> float:
    """Half the spread between the ``q`` and ``100 - q`` percentiles."""
    lo, hi = np.percentile(np.asarray(x, dtype=float), [q, 100 - q])
    return float(0.5 * (hi - lo))


class EtaCap(NamedTuple):
    fraction: float
    found: bool


def measure_eta_cap(recovered, rate: float, true_duration: float, **liveness) -> EtaCap:
    """Recovered active length over the true tone duration.

    ``recovered`` must be a gap-dropped concatenation sampled at the row
    readout rate, so lost inter-frame time shortens the tone.
    """
    if true_duration <= 0:
        raise RangeError("true duration must be positive")
    found = detect_activity(recovered, rate, **liveness)
    if found is None:
        return EtaCap(0.0, False)
    start, end = found
    return EtaCap(min(1.0, (end - start) / rate / true_duration), True)


def adversary_advantage(accuracy: float, label_count: int) -> float:
    """Accuracy margin over a uniform random guesser: accuracy - 1/|L|."""
    if label_count < 2 or int(label_count) != label_count:
        raise RangeError("label_count must be an integer >= 2")
    if not 0.0 <= accuracy <= 1.0:
        raise RangeError("accuracy must lie in [0, 1]")
    return accuracy - 1.0 / label_count


def xcorr_score(x, reference) -> float:
    """Peak normalised cross-correlation magnitude in [0, 1].

    A crude intelligibility proxy for regression tests; it is not STOI.
    """
    x = np.asarray(x, dtype=float) - np.mean(x)
    r = np.asarray(reference, dtype=float) - np.mean(reference)
    nx, nr = np.linalg.norm(x), np.linalg.norm(r)
    if nx == 0 or nr == 0:
        return 0.0
    c = sps.correlate(x, r, mode="full", method="fft")
    return float(min(1.0, np.max(np.abs(c)) / (nx * nr)))


@dataclass
class MetricsReport:
    snr_db: float = float("nan")
    dominant_freq: float = float("nan")
    freq_track: list = field(default_factory=list)
    eta_cap_measured: float = float("nan")
    notes: str = ""

    def __post_init__(self):
        if not np.isnan(self.eta_cap_measured) and not 0 <= self.eta_cap_measured <= 1:
            raise RangeError("eta_cap_measured must lie in [0, 1]")

    def as_dict(self) -> dict:
        track = ";".join(f"{t:.6g}:{f:.6g}" for t, f in self.freq_track)
        return {
            "snr_db": _num(self.snr_db),
            "dominant_freq_hz": _num(self.dominant_freq),
            "eta_cap_measured": _num(self.eta_cap_measured),
            "freq_track": track,
            "notes": self.notes,
        }

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.as_dict().items())

    @staticmethod
    def csv_header():
        return ["snr_db", "dominant_freq_hz", "eta_cap_measured", "notes"]

    def csv_row(self):
        d = self.as_dict()
        return [d[k] for k in self.csv_header()]


def _num(v):
    if v is None or np.isnan(v):
        return "nan"
    return repr(float(v))
