"""Demons registration and column-group channel extraction.

Displacements follow the convention ``I_mov(p + D(p)) ~= I_ref(p)``: content
moved by +c pixels in X yields D_X ~= +c.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from .camera import ShutterTiming
from .errors import DegenerateSceneError, InputError, RangeError
from .renderer import FrameSequence

__all__ = [
    "DemonsParams",
    "DisplacementField",
    "ChannelSet",
    "register",
    "group_count",
    "channels_from_field",
    "channels_from_video",
]


@dataclass(frozen=True)
class DemonsParams:
    sigma_fluid: float = 1.0
    sigma_diffusion: float = 1.0
    iterations: int = 50
    tol: float = 1e-4
    patience: int = 5
    levels: int = 2
    min_variance: float = 1e-4


@dataclass(frozen=True)
class DisplacementField:
    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        if self.dx.shape != self.dy.shape or self.dx.ndim != 2:
            raise InputError("field components must be equal-shape 2-D arrays")

    @property
    def shape(self):
        return self.dx.shape


def _warp(img, uy, ux, grid):
    """Warped image plus a mask of samples that landed inside ``img``."""
    rr = grid[0] + uy
    cc = grid[1] + ux
    inside = (rr >= 0) & (rr <= img.shape[0] - 1) & (cc >= 0) & (cc <= img.shape[1] - 1)
    return ndimage.map_coordinates(img, [rr, cc], order=1, mode="nearest"), inside


def _smooth(a, sigma):
    return ndimage.gaussian_filter(a, sigma, mode="nearest") if sigma > 0 else a


def _demons_level(ref, mov, uy, ux, p: DemonsParams):
    grid = np.mgrid[0:ref.shape[0], 0:ref.shape[1]].astype(float)
    gy, gx = np.gradient(ref)
    g2 = gy * gy + gx * gx
    history = []
    for _ in range(p.iterations):
        warped, inside = _warp(mov, uy, ux, grid)
        # samples pulled from beyond the moving image carry no information
        diff = np.where(inside, ref - warped, 0.0)
        msd = float(np.mean(diff * diff))
        history.append(msd)
        denom = g2 + diff * diff
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(denom > 1e-12, diff / denom, 0.0)
        uy = uy + _smooth(scale * gy, p.sigma_fluid)
        ux = ux + _smooth(scale * gx, p.sigma_fluid)
        uy = _smooth(uy, p.sigma_diffusion)
        ux = _smooth(ux, p.sigma_diffusion)
        if msd == 0.0:
            break
        if len(history) > p.patience:
            old = history[-1 - p.patience]
            if old > 0 and (old - msd) / old < p.tol:
                break
    return uy, ux


def _downsample(img):
    sm = ndimage.gaussian_filter(img, 1.0, mode="nearest")
    return sm[::2, ::2]


def _upsample_field(u, shape):
    # coarse pixel c sits on fine pixel 2c
    rr, cc = np.mgrid[0:shape[0], 0:shape[1]] / 2.0
    return 2.0 * ndimage.map_coordinates(u, [rr, cc], order=1, mode="nearest")


def register(ref: np.ndarray, mov: np.ndarray, params: DemonsParams = DemonsParams()
             ) -> DisplacementField:
    """Thirion demons with Gaussian fluid/diffusion regularisation.

    Per iteration the force ``(I_ref - I_mov o warp) grad(I_ref) /
    (|grad I_ref|^2 + (I_ref - I_mov o warp)^2)`` is smoothed with
    ``sigma_fluid``, added to the field, and the field is smoothed with
    ``sigma_diffusion``.  Stops early when the mean squared difference
    improves by less than ``tol`` (relative) over ``patience`` iterations.
    """
    ref = np.asarray(ref, dtype=float)
    mov = np.asarray(mov, dtype=float)
    if ref.shape != mov.shape or ref.ndim != 2:
        raise InputError(f"shape mismatch: {ref.shape} vs {mov.shape}")
    if ref.var() < params.min_variance:
        raise DegenerateSceneError("reference frame is textureless; cannot register")

    pyramid = [(ref, mov)]
    for _ in range(params.levels - 1):
        r, m = pyramid[-1]
        if min(r.shape) < 16:
            break
        pyramid.append((_downsample(r), _downsample(m)))

    uy = ux = None
    for r, m in reversed(pyramid):
        if uy is None:
            uy = np.zeros(r.shape)
            ux = np.zeros(r.shape)
        else:
            uy = _upsample_field(uy, r.shape)
            ux = _upsample_field(ux, r.shape)
        uy, ux = _demons_level(r, m, uy, ux, params)
    return DisplacementField(ux, uy)


def group_count(rows: int, cols: int) -> int:
    """Number of column groups: nearest integer to 2N/M, at least 1."""
    return max(1, int(np.floor(2.0 * cols / rows + 0.5)))


def _group_bounds(cols: int, n_groups: int) -> np.ndarray:
    return np.floor(np.arange(n_groups + 1) * cols / n_groups + 0.5).astype(int)


def channels_from_field(field: DisplacementField, n_groups: int) -> np.ndarray:
    """Return ``(2 * n_groups, M)``: X channels first, then Y channels."""
    cols = field.shape[1]
    if not 1 <= n_groups <= cols:
        raise RangeError(f"n_groups must lie in [1, {cols}]")
    b = _group_bounds(cols, n_groups)
    xs = [field.dx[:, b[i]:b[i + 1]].mean(axis=1) for i in range(n_groups)]
    ys = [field.dy[:, b[i]:b[i + 1]].mean(axis=1) for i in range(n_groups)]
    return np.array(xs + ys)


@dataclass
class ChannelSet:
    """Column-group channels concatenated over frames.

    ``data`` has shape ``(2 * n_groups, K * M)`` with X channels first.
    Samples are spaced ``timing.row_readout`` apart; ``frame_starts`` holds
    the sample index at which each frame begins.
    """

    data: np.ndarray
    n_groups: int
    rows: int
    timing: ShutterTiming
    fields: list | None = dc_field(default=None, repr=False)

    @property
    def n_frames(self) -> int:
        return self.data.shape[1] // self.rows

    @property
    def frame_starts(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.rows

    @property
    def sample_rate(self) -> float:
        return self.timing.row_rate

    @property
    def x(self) -> np.ndarray:
        return self.data[:self.n_groups]

    @property
    def y(self) -> np.ndarray:
        return self.data[self.n_groups:]

    def times(self) -> np.ndarray:
        """True capture time of each sample (mid-exposure, sequential readout)."""
        t = self.timing
        k = np.repeat(np.arange(self.n_frames), self.rows)
        p = np.tile(np.arange(self.rows), self.n_frames)
        starts = np.array([t.frame_start_step(i) for i in range(self.n_frames)]) * t.step
        return starts[k] + p * t.row_readout + 0.5 * t.exposure

    def names(self):
        return ([f"X{i + 1}" for i in range(self.n_groups)]
                + [f"Y{i + 1}" for i in range(self.n_groups)])


def channels_from_video(frames: FrameSequence, n_groups: int | None = None,
                        params: DemonsParams = DemonsParams(), reference=None,
                        refresh: int | None = None, keep_fields: bool = False) -> ChannelSet:
    """Register every frame against a reference and concatenate channels.

    The reference is frame 0 unless ``reference`` (e.g. a still capture of
    the scene) is given.  ``refresh`` re-anchors the reference to the
    current frame every ``refresh`` frames; ``None`` never refreshes.
    ``keep_fields`` retains every frame's displacement field.
    """
    K, M, N = frames.frames.shape
    if n_groups is None:
        n_groups = group_count(M, N)
    ref = frames.frames[0] if reference is None else np.asarray(reference, dtype=float)
    chans = []
    fields = [] if keep_fields else None
    for k in range(K):
        if refresh and reference is None and k and k % refresh == 0:
            ref = frames.frames[k]
        field = register(ref, frames.frames[k], params)
        chans.append(channels_from_field(field, n_groups))
        if keep_fields:
            fields.append(field)
    return ChannelSet(np.concatenate(chans, axis=1), n_groups, M, frames.timing, fields)
