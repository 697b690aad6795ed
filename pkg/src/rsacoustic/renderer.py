"""Rolling-shutter image formation of a static scene under lens motion.

Each output row is the mean of the scene views seen during that row's
exposure window (both window ends included), sampled on the simulation
grid of the shutter timing.  Translations use bilinear interpolation.
Pure translations are rendered by histogramming the bilinear weights over
integer pixel offsets, which is exact and independent of the window
length; windows with a non-unit zoom factor fall back to direct
per-sample resampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .camera import SensorGeometry, ShutterSchedule, ShutterTiming, px_per_um, z_scale
from .errors import CoverageError, InputError, MarginError, RangeError
from .signal import LensMotion

__all__ = [
    "Scene",
    "PixelMotion",
    "FrameSequence",
    "texture_scene",
    "motion_to_pixels",
    "render_frame",
    "render_video",
    "exposure_window",
]


@dataclass(frozen=True)
class Scene:
    """Reference intensity grid of size (M + 2m) x (N + 2m)."""

    image: np.ndarray
    margin: int

    def __post_init__(self):
        img = np.asarray(self.image, dtype=float)
        if img.ndim != 2:
            raise InputError("scene must be 2-D")
        if self.margin < 0 or 2 * self.margin >= min(img.shape):
            raise InputError("invalid scene margin")
        if img.min() < 0 or img.max() > 1:
            raise InputError("scene intensities must lie in [0, 1]")
        object.__setattr__(self, "image", img)

    @property
    def frame_shape(self):
        m = self.margin
        return self.image.shape[0] - 2 * m, self.image.shape[1] - 2 * m

    def crop(self) -> np.ndarray:
        m = self.margin
        r, c = self.frame_shape
        return self.image[m:m + r, m:m + c].copy()

    def scaled(self, alpha: float) -> "Scene":
        return Scene(self.image * alpha, self.margin)


def texture_scene(rows: int, cols: int, margin: int = 16, seed: int = 0,
                  sigma: float = 1.5, ramp: float = 0.0) -> Scene:
    """Seeded band-limited noise texture, optionally tilted by a horizontal ramp.

    Intensities span [0.1, 0.9] before the ramp is added; the result is
    clipped to [0, 1].
    """
    rng = np.random.default_rng(seed)
    shape = (rows + 2 * margin, cols + 2 * margin)
    tex = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    tex -= tex.min()
    tex /= tex.max()
    img = 0.1 + 0.8 * tex
    if ramp:
        img = img + ramp * np.linspace(-0.5, 0.5, shape[1])[None, :]
    return Scene(np.clip(img, 0.0, 1.0), margin)


@dataclass(frozen=True)
class PixelMotion:
    """Image-domain motion on the simulation grid.

    ``x`` and ``y`` are content translations in pixels (positive x moves
    content towards higher column indices); ``scale`` is the zoom factor
    about the frame centre (1 = no zoom).
    """

    x: np.ndarray
    y: np.ndarray
    step: float
    scale: np.ndarray = field(default=None)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        s = np.ones_like(x) if self.scale is None else np.asarray(self.scale, dtype=float)
        if not (x.shape == y.shape == s.shape) or x.ndim != 1:
            raise InputError("motion axes must be 1-D and of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "scale", s)

    def __len__(self):
        return len(self.x)

    @classmethod
    def translation(cls, x, step: float, y=None) -> "PixelMotion":
        x = np.asarray(x, dtype=float)
        return cls(x, np.zeros_like(x) if y is None else y, step)

    def __add__(self, other: "PixelMotion") -> "PixelMotion":
        if self.step != other.step or len(self) != len(other):
            raise InputError("motions must share step and length")
        return PixelMotion(self.x + other.x, self.y + other.y, self.step,
                           self.scale * other.scale)


@dataclass
class FrameSequence:
    frames: np.ndarray  # (K, M, N)
    timing: ShutterTiming
    schedule: ShutterSchedule

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.ndim != 3 or len(self.frames) < 1:
            raise InputError("frames must have shape (K, M, N) with K >= 1")

    def __len__(self):
        return len(self.frames)

    @property
    def shape(self):
        return self.frames.shape[1:]


def motion_to_pixels(motion: LensMotion, geom: SensorGeometry) -> PixelMotion:
    """Project lens motion (um) into pixel translations and a zoom factor."""
    k = px_per_um(geom, "lens")
    return PixelMotion(motion.x * k, motion.y * k, motion.step, z_scale(geom, motion.z))


def exposure_window(timing: ShutterTiming, k: int, position: int):
    """Inclusive simulation-step range ``(n_start, n_end)`` of a readout slot."""
    n0 = timing.frame_start_step(k) + position * timing.steps_per_row
    return n0, n0 + timing.exposure_steps


def _windows(motion, timing, schedule, k, rows):
    pos = schedule.positions(k)
    starts = timing.frame_start_step(k) + pos * timing.steps_per_row
    L = timing.exposure_steps
    if starts.min() < 0 or starts.max() + L >= len(motion):
        raise CoverageError(f"motion of {len(motion)} samples does not cover frame {k} "
                            f"(needs {starts.max() + L + 1})")
    idx = starts[:, None] + np.arange(L + 1)[None, :]
    return idx


def render_frame(scene: Scene, motion: PixelMotion, schedule: ShutterSchedule,
                 timing: ShutterTiming, k: int) -> np.ndarray:
    """Render frame ``k``: one exposure-averaged row per sensor row."""
    rows, cols = scene.frame_shape
    if schedule.rows != rows:
        raise InputError("schedule row count does not match the scene")
    if abs(motion.step - timing.step) > 1e-12 * timing.step:
        raise InputError("motion step does not match the timing step")
    idx = _windows(motion, timing, schedule, k, rows)
    x = motion.x[idx]
    y = motion.y[idx]
    s = motion.scale[idx]
    m = scene.margin
    if max(np.abs(x).max(), np.abs(y).max()) > m:
        raise MarginError(f"displacement {max(np.abs(x).max(), np.abs(y).max()):.3g} px "
                          f"exceeds scene margin {m}")
    out = np.empty((rows, cols))
    zoom_rows = np.any(s != 1.0, axis=1)
    if not zoom_rows.all():
        plain = ~zoom_rows
        out[plain] = _render_translation(scene, np.nonzero(plain)[0], x[plain], y[plain])
    if zoom_rows.any():
        sel = np.nonzero(zoom_rows)[0]
        out[sel] = _render_general(scene, sel, x[sel], y[sel], s[sel])
    return out


def _render_translation(scene, row_ids, x, y):
    """Exact bilinear exposure mean for translation-only windows."""
    img = scene.image
    m = scene.margin
    H, W = img.shape
    cols = scene.frame_shape[1]
    n = x.shape[1]
    fx, fy = np.floor(x), np.floor(y)
    ax, ay = x - fx, y - fy
    ox0, oy0 = int(fx.min()), int(fy.min())
    nx = int(fx.max()) - ox0 + 2
    ny = int(fy.max()) - oy0 + 2
    ix = (fx - ox0).astype(int)
    iy = (fy - oy0).astype(int)
    R = len(row_ids)
    weights = np.zeros((R, ny, nx))
    r_idx = np.broadcast_to(np.arange(R)[:, None], ix.shape)
    for dy, wy in ((0, 1 - ay), (1, ay)):
        for dx, wx in ((0, 1 - ax), (1, ax)):
            np.add.at(weights, (r_idx, iy + dy, ix + dx), wy * wx)
    weights /= n

    out = np.zeros((R, cols))
    col_base = m + np.arange(cols)
    for a in range(ny):
        oy = oy0 + a
        src_r = np.clip(m + row_ids - oy, 0, H - 1)
        for b in range(nx):
            w = weights[:, a, b]
            if not np.any(w):
                continue
            ox = ox0 + b
            src_c = np.clip(col_base - ox, 0, W - 1)
            out += w[:, None] * img[np.ix_(src_r, src_c)]
    return out


def _render_general(scene, row_ids, x, y, s):
    """Per-sample bilinear resampling with zoom about the frame centre."""
    img = scene.image
    m = scene.margin
    rows, cols = scene.frame_shape
    ci, cj = (rows - 1) / 2.0, (cols - 1) / 2.0
    jj = np.arange(cols) - cj
    out = np.empty((len(row_ids), cols))
    for r, i in enumerate(row_ids):
        sr = s[r][:, None]
        rr = m + ci + (i - ci) / sr - y[r][:, None]
        cc = m + cj + jj[None, :] / sr - x[r][:, None]
        rr = np.broadcast_to(rr, cc.shape)
        vals = ndimage.map_coordinates(img, [rr.ravel(), cc.ravel()], order=1, mode="nearest")
        out[r] = vals.reshape(cc.shape).mean(axis=0)
    return out


def frames_needed(timing: ShutterTiming, rows: int, n_samples: int) -> int:
    """Largest K such that K frames are covered by ``n_samples`` motion samples."""
    L = timing.exposure_steps
    last = (rows - 1) * timing.steps_per_row + L
    k = 0
    while timing.frame_start_step(k) + last < n_samples:
        k += 1
    return k


def render_video(scene: Scene, motion: PixelMotion, schedule: ShutterSchedule,
                 timing: ShutterTiming, K: int | None = None, noise_std: float = 0.0,
                 noise_seed: int = 0) -> FrameSequence:
    """Render ``K`` frames (default: as many as the motion covers).

    ``noise_std`` adds Gaussian read noise to every pixel; frame k draws
    from a generator keyed by ``(noise_seed, k)``.
    """
    rows = scene.frame_shape[0]
    timing.check(rows)
    if K is None:
        K = frames_needed(timing, rows, len(motion))
    if K < 1:
        raise CoverageError("motion is too short for a single frame")
    if noise_std < 0:
        raise RangeError("noise_std must be non-negative")
    frames = np.stack([render_frame(scene, motion, schedule, timing, k) for k in range(K)])
    if noise_std > 0:
        for k in range(K):
            rng = np.random.default_rng(np.random.SeedSequence([noise_seed, k]))
            frames[k] += noise_std * rng.standard_normal(frames[k].shape)
    return FrameSequence(frames, timing, schedule)
