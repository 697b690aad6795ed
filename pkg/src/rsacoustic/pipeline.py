"""End-to-end composition: audio -> lens motion -> frames -> channels -> audio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import SensorGeometry, ShutterSchedule, ShutterTiming, make_schedule
from .recovery import PreprocessConfig, RecoveredSignal, channels_to_audio, preprocess
from .registration import ChannelSet, DemonsParams, channels_from_video
from .renderer import (FrameSequence, PixelMotion, Scene, motion_to_pixels, render_video,
                       texture_scene)
from .metrics import tone_amplitude
from .signal import AudioSignal, LensMotion, MechanicalPath, audio_to_lens_motion, synth_tone

__all__ = ["Simulation", "simulate", "extract", "recover", "required_margin", "tone_response"]


@dataclass
class Simulation:
    audio: AudioSignal
    lens_motion: LensMotion
    pixel_motion: PixelMotion
    frames: FrameSequence
    scene: Scene
    geom: SensorGeometry

    @property
    def timing(self) -> ShutterTiming:
        return self.frames.timing


def required_margin(motion: PixelMotion, geom: SensorGeometry) -> int:
    """Scene margin that covers the translation and zoom excursions."""
    trans = max(np.abs(motion.x).max(initial=0.0), np.abs(motion.y).max(initial=0.0))
    zoom = np.abs(motion.scale - 1.0).max(initial=0.0) * max(geom.rows, geom.cols) / 2
    return int(math.ceil(trans + zoom)) + 2


def simulate(audio: AudioSignal, geom: SensorGeometry, timing: ShutterTiming, *,
             path: MechanicalPath = MechanicalPath(), spl: float | None = None,
             axis_mix=(1.0, 0.0, 0.0), scene: Scene | None = None, scene_seed: int = 0,
             schedule: ShutterSchedule | None = None, K: int | None = None,
             pixel_motion: PixelMotion | None = None, noise_std: float = 0.0,
             noise_seed: int = 0) -> Simulation:
    """Render the rolling-shutter video a static scene produces under ``audio``.

    ``spl`` defaults to the path's reference level.  A textured scene with
    a sufficient margin is generated from ``scene_seed`` unless one is given.
    Passing ``pixel_motion`` bypasses the mechanical and optical models.
    ``noise_std`` adds seeded Gaussian read noise to the frames.
    """
    spl = path.spl_ref if spl is None else spl
    lens = audio_to_lens_motion(audio, path, spl, axis_mix, timing.step)
    motion = motion_to_pixels(lens, geom) if pixel_motion is None else pixel_motion
    if scene is None:
        scene = texture_scene(geom.rows, geom.cols, required_margin(motion, geom), scene_seed)
    if schedule is None:
        schedule = make_schedule(timing, geom.rows)
    frames = render_video(scene, motion, schedule, timing, K, noise_std, noise_seed)
    return Simulation(audio, lens, motion, frames, scene, geom)


def extract(frames: FrameSequence, params: DemonsParams = DemonsParams(), reference=None,
            n_groups: int | None = None) -> ChannelSet:
    return channels_from_video(frames, n_groups, params, reference)


def recover(channels: ChannelSet, cfg: PreprocessConfig = PreprocessConfig(),
            gap_policy: str = "drop", target_rate: float | None = None,
            select: int | None = None) -> tuple[AudioSignal, list[RecoveredSignal]]:
    signals = preprocess(channels, cfg)
    audio = channels_to_audio(signals, gap_policy, target_rate, channels.timing,
                              channels.rows, select)
    return audio, signals


def tone_response(freq: float, geom: SensorGeometry, timing: ShutterTiming, *,
                  spl: float | None = None, path: MechanicalPath = MechanicalPath(),
                  K: int = 4, scene_seed: int = 0, params: DemonsParams = DemonsParams(),
                  axis_mix=(1.0, 0.0, 0.0), pixel_motion: PixelMotion | None = None
                  ) -> tuple[float, ChannelSet]:
    """Recovered X amplitude (px) of a unit tone filmed for ``K`` frames.

    Frames are registered against a still capture of the scene, and the
    amplitude is a least-squares sinusoid fit on the true capture times,
    so inter-frame gaps do not bias it.
    """
    duration = (K + 1) / timing.frame_rate
    audio = synth_tone(freq, duration, 48000.0)
    sim = simulate(audio, geom, timing, path=path, spl=spl, axis_mix=axis_mix,
                   scene_seed=scene_seed, K=K, pixel_motion=pixel_motion)
    ch = extract(sim.frames, params, reference=sim.scene.crop())
    return tone_amplitude(ch.x.mean(axis=0), ch.times(), freq), ch
