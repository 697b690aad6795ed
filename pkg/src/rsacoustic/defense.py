"""Camera-side defenses: faster rolling shutters, random-coded row order,
lens locking, and the voice-coil-motor trade-off of stiffer springs."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .camera import SensorGeometry, ShutterTiming, make_schedule, px_per_um, z_scale
from .errors import InfeasibleDesignError, InputError, RangeError, SingularityError
from .metrics import dominant_frequency, peak_to_background_db
from .recovery import fill_gaps, gap_length
from .registration import DemonsParams, channels_from_video
from .renderer import PixelMotion, Scene, render_video
from .signal import LensMotion, resample

__all__ = [
    "VcmDesign",
    "VcmResult",
    "target_fraction",
    "simulate_sample_rate",
    "evaluate_random_coded",
    "lens_lock",
    "vcm_sensitivity",
    "compensate_stiffer_spring",
    "DEFENSE_CSV_HEADER",
]

DEFENSE_CSV_HEADER = ["defense", "parameter", "value", "peak_to_background_db",
                      "dominant_freq_hz", "snr_db"]


def target_fraction(sample_rate: float, rows: int = 1080, frame_rate: float = 30.0) -> float:
    """Captured fraction eta_d = M f_v / S_r of a sensor reading rows at ``sample_rate``."""
    if sample_rate <= 0:
        raise RangeError("sample rate must be positive")
    return rows * frame_rate / sample_rate


def simulate_sample_rate(W, sample_rate: float, rows: int = 1080, frame_rate: float = 30.0,
                         base_rate: float = 34000.0, offset: int = 0) -> np.ndarray:
    """Predict the waveform a faster rolling shutter would have produced.

    ``W`` (1-D, or 2-D with one channel per row) is a gap-dropped recording
    at ``base_rate`` whose frames are ``rows`` samples long, the first frame
    boundary sitting at ``offset``.  It is upsampled by U = S_r / base_rate;
    a 0/1 square wave phase-aligned with frame starts then keeps the leading
    eta_d / eta_cap of every frame (which is the duty cycle eta_d on the
    true time base, since captured time is eta_cap of real time), and the
    kept runs are concatenated.  The result is sampled at ``sample_rate``.
    """
    W = np.asarray(W, dtype=float)
    eta_d = target_fraction(sample_rate, rows, frame_rate)
    eta_cap = target_fraction(base_rate, rows, frame_rate)
    if eta_d > 1.0 + 1e-12:
        raise RangeError(f"target rate {sample_rate} Hz implies eta_d = {eta_d:.3f} > 1")
    if eta_d > eta_cap * (1 + 1e-12):
        raise RangeError("target rate is slower than the base rate")
    U = rows * frame_rate / (base_rate * eta_d)
    up = resample(W, base_rate, sample_rate) if W.ndim == 1 else \
        np.array([resample(w, base_rate, sample_rate) for w in W])
    n = up.shape[-1]
    period = rows * U
    t = np.arange(n) - offset * U
    # tolerate float error in U so frame starts land at position 0
    pos = t - period * np.floor(t / period + 1e-9)
    keep = pos < period * (eta_d / eta_cap) - 1e-6
    return up[..., keep]


def _xmean(channels):
    """Mean X channel on the true time base (inter-frame gaps zero-filled)."""
    gap = gap_length(channels.timing, channels.rows)
    return fill_gaps(channels.x.mean(axis=0), channels.frame_starts, gap)


def evaluate_random_coded(scene: Scene, motion: PixelMotion, timing: ShutterTiming,
                          seed: int, freq: float, K: int | None = None,
                          params: DemonsParams = DemonsParams(), reference=None,
                          band=(20.0, 4000.0), noise_std: float = 0.0) -> dict:
    """Render and extract under sequential and random-coded schedules.

    Returns ``{"sequential": {...}, "random-coded": {...}}`` with the
    peak-to-background ratio at ``freq`` and the dominant frequency of the
    mean X channel, analysed on the true time base (gaps zero-filled) as an
    attacker who assumes sequential readout would.  Without any motion the
    ratio and frequency are ``None``.
    Both schedules see the same read noise (``noise_std``, seeded by ``seed``).
    """
    rows = scene.frame_shape[0]
    out = {}
    for mode in ("sequential", "random-coded"):
        sched = make_schedule(timing, rows, mode, seed)
        frames = render_video(scene, motion, sched, timing, K, noise_std, seed)
        chans = channels_from_video(frames, params=params, reference=reference)
        sig = _xmean(chans)
        rate = chans.sample_rate
        if np.max(np.abs(motion.x)) == 0 and np.max(np.abs(motion.y)) == 0:
            out[mode] = {"peak_to_background_db": None, "dominant_freq_hz": None,
                         "signal": sig}
            continue
        out[mode] = {
            "peak_to_background_db": peak_to_background_db(sig, rate, freq, band=band),
            "dominant_freq_hz": dominant_frequency(sig, rate, fmin=band[0], fmax=band[1]),
            "signal": sig,
        }
    return out


def lens_lock(motion: LensMotion, residual: float, geom: SensorGeometry,
              body: LensMotion | None = None) -> PixelMotion:
    """Pixel motion with the lens locked down to ``residual`` of its travel.

    Body motion (the whole camera moving) still projects through f/d.
    """
    if not 0.0 <= residual <= 1.0:
        raise RangeError("residual must lie in [0, 1]")
    k_lens = px_per_um(geom, "lens")
    x = residual * motion.x * k_lens
    y = residual * motion.y * k_lens
    scale = z_scale(geom, residual * motion.z)
    if body is not None:
        if len(body) != len(motion) or body.step != motion.step:
            raise InputError("body motion must match the lens motion's length and step")
        k_body = px_per_um(geom, "body")
        x = x + body.x * k_body
        y = y + body.y * k_body
    return PixelMotion(x, y, motion.step, scale)


@dataclass(frozen=True)
class VcmDesign:
    """Voice-coil actuator parameters (SI units)."""

    R: float  # coil resistance, ohm
    V: float  # drive voltage, V
    f_fric: float  # friction, N
    c_l: float  # suspension spring constant, N/m
    x: float  # lens displacement, m
    m: float  # moving mass, kg
    N_w: float  # coil windings
    l_w: float  # effective wire length in the gap, m
    B_g: float  # gap flux density, T
    A_coil: float  # wire cross-section, m^2
    rho: float  # resistivity, ohm m
    L_coil: float  # total wire length, m
    g: float = 9.81

    def __post_init__(self):
        positive = ("R", "V", "c_l", "m", "N_w", "l_w", "B_g", "A_coil", "g")
        for name in positive:
            if getattr(self, name) <= 0:
                raise RangeError(f"{name} must be positive")
        if self.f_fric < 0 or self.x < 0 or self.rho < 0 or self.L_coil < 0:
            raise RangeError("f_fric, x, rho and L_coil must be non-negative")


class VcmResult(NamedTuple):
    S: float
    F_e: float
    net_force: float
    actuates: bool


def _force(d: VcmDesign) -> float:
    rl = d.rho * d.L_coil
    if rl == 0:
        raise SingularityError("rho * L_coil is zero")
    return d.N_w * (d.V * d.A_coil / rl) * d.l_w * d.B_g


def vcm_sensitivity(design: VcmDesign) -> VcmResult:
    """Actuation force F_e = N_w i l_w B_g and sensitivity
    S = (R / V^2) ((F_e - f_fric - x c_l - m g) / m)^2."""
    F_e = _force(design)
    net = F_e - design.f_fric - design.x * design.c_l - design.m * design.g
    S = design.R / design.V ** 2 * (net / design.m) ** 2
    return VcmResult(S, F_e, net, net > 0)


def compensate_stiffer_spring(design: VcmDesign, c_l_new: float) -> dict:
    """Designs that keep S unchanged after stiffening the spring to ``c_l_new``.

    Each of N_w, l_w, A_coil and B_g is scaled on its own (F_e is linear in
    each) so that the net actuation force, and hence S, is preserved.  A
    design whose net force is already non-positive is rejected.
    """
    if c_l_new < design.c_l:
        raise RangeError("c_l_new must not be smaller than the current c_l")
    base = vcm_sensitivity(design)
    if not base.actuates:
        raise InfeasibleDesignError("the design cannot actuate the lens; there is no "
                                    "positive net force to preserve")
    names = ("N_w", "l_w", "A_coil", "B_g")
    if c_l_new == design.c_l:
        return {name: design for name in names}
    required = base.net_force + design.f_fric + design.x * c_l_new + design.m * design.g
    if required <= 0:
        raise InfeasibleDesignError("no positive actuation force restores the net force")
    factor = required / base.F_e
    return {name: replace(design, c_l=c_l_new, **{name: getattr(design, name) * factor})
            for name in names}
