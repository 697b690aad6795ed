"""Configuration-driven experiment runners shared by the command line and demos.

These turn an :class:`~rsacoustic.config.ExperimentConfig` into model
objects and result tables; they never touch the filesystem except to read
configured inputs (WAV audio, PGM scene).
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .camera import make_schedule
from .config import ExperimentConfig
from .defense import (compensate_stiffer_spring, evaluate_random_coded, lens_lock,
                      simulate_sample_rate, vcm_sensitivity)
from .errors import ConfigurationError
from .fileio import read_pgm, read_wav
from .metrics import band_snr_db, dominant_frequency, peak_amplitude, peak_to_background_db
from .pipeline import Simulation, extract, recover, required_margin, simulate, tone_response
from .renderer import Scene, motion_to_pixels, texture_scene
from .signal import AudioSignal, audio_to_lens_motion, synth_chirp, synth_tone

__all__ = [
    "build_audio",
    "build_scene",
    "run_simulation",
    "run_defense",
    "run_sweep",
    "SWEEP_HEADER",
    "DEFENSE_HEADER",
    "VCM_HEADER",
]

DEFENSE_HEADER = ["defense", "parameter", "value", "amplitude_px", "peak_to_background_db",
                  "dominant_freq_hz", "snr_db"]
VCM_HEADER = ["c_l", "variable", "value", "S", "F_e", "net_force"]
SWEEP_HEADER = ["axis", "value", "amplitude_px", "peak_px", "snr_db"]


def build_audio(cfg: ExperimentConfig) -> AudioSignal:
    """Synthesised or loaded audio, padded with ``lead`` seconds of silence on both sides."""
    a = cfg.audio
    if a.source == "tone":
        sig = synth_tone(a.freq, a.duration, a.sample_rate, a.amplitude)
    elif a.source == "chirp":
        sig = synth_chirp(a.f0, a.f1, a.duration, a.sample_rate, a.amplitude)
    else:
        sig = read_wav(a.path)
    if a.lead > 0:
        pad = np.zeros(int(round(a.lead * sig.sample_rate)))
        sig = AudioSignal(np.concatenate([pad, sig.samples, pad]), sig.sample_rate)
    return sig


def build_scene(cfg: ExperimentConfig, motion=None) -> Scene | None:
    """Configured scene; ``None`` lets :func:`simulate` size a texture to the motion."""
    s = cfg.scene
    rows, cols = cfg.geom.rows, cfg.geom.cols
    if s.source == "image":
        img = read_pgm(s.path)
        expected = (rows + 2 * s.margin, cols + 2 * s.margin)
        if img.shape != expected:
            raise ConfigurationError(f"[scene] image is {img.shape}, expected {expected} "
                                     "(frame size plus margin on every side)")
        return Scene(img, s.margin)
    margin = s.margin
    if margin is None:
        if motion is None:
            return None
        margin = required_margin(motion, cfg.geom)
    return texture_scene(rows, cols, margin, s.seed, s.sigma, s.ramp)


def run_simulation(cfg: ExperimentConfig, audio: AudioSignal | None = None) -> Simulation:
    audio = build_audio(cfg) if audio is None else audio
    lens = audio_to_lens_motion(audio, cfg.path, cfg.spl, cfg.axis_mix, cfg.timing.step)
    motion = motion_to_pixels(lens, cfg.geom)
    scene = build_scene(cfg, motion)
    schedule = make_schedule(cfg.timing, cfg.geom.rows, cfg.schedule_mode, cfg.schedule_seed)
    return simulate(audio, cfg.geom, cfg.timing, path=cfg.path, spl=cfg.spl,
                    axis_mix=cfg.axis_mix, scene=scene, schedule=schedule, K=cfg.frames,
                    pixel_motion=motion, noise_std=cfg.read_noise, noise_seed=cfg.seed)


def _tone_freq(cfg, override):
    if override is not None:
        return override
    if cfg.audio.source != "tone":
        raise ConfigurationError("this experiment needs a tone: set [audio] source = tone "
                                 "or give an explicit freq")
    return cfg.audio.freq


def _still(sim, cfg):
    return sim.scene.crop() if cfg.reference == "still" else None


def run_defense(cfg: ExperimentConfig) -> tuple[list, list]:
    """Return ``(header, rows)`` for the configured defense."""
    d = cfg.defense
    if d.kind == "vcm":
        rows = []
        base = vcm_sensitivity(cfg.vcm)
        rows.append([cfg.vcm.c_l, "baseline", "", base.S, base.F_e, base.net_force])
        for c in d.spring_constants:
            if c < cfg.vcm.c_l:
                raise ConfigurationError("[defense] spring_constants must not be below [vcm] c_l")
            for name, design in compensate_stiffer_spring(cfg.vcm, c).items():
                r = vcm_sensitivity(design)
                rows.append([c, name, getattr(design, name), r.S, r.F_e, r.net_force])
        return VCM_HEADER, rows

    freq = _tone_freq(cfg, d.freq)
    rows = []
    if d.kind == "sample-rate":
        sim = run_simulation(cfg)
        ch = extract(sim.frames, cfg.demons, _still(sim, cfg), cfg.groups)
        audio, _ = recover(ch, cfg.preprocess, "drop", None, cfg.select)
        base = cfg.timing.row_rate
        for sr in d.sample_rates:
            w = simulate_sample_rate(audio.samples, sr, cfg.geom.rows, cfg.timing.frame_rate,
                                     base)
            rows.append(["sample-rate", "S_r_hz", sr, peak_amplitude(w),
                         peak_to_background_db(w, sr, freq),
                         dominant_frequency(w, sr, fmin=20.0, fmax=4000.0),
                         band_snr_db(w, sr, freq, sr / cfg.geom.rows)])
    elif d.kind == "random-coded":
        sim = run_simulation(cfg)
        scene = sim.scene
        for seed in d.seeds:
            rep = evaluate_random_coded(scene, sim.pixel_motion, cfg.timing, seed, freq,
                                        cfg.frames, cfg.demons, _still(sim, cfg),
                                        noise_std=cfg.read_noise)
            for mode in ("sequential", "random-coded"):
                r = rep[mode]
                rows.append([mode, "seed", seed, peak_amplitude(r["signal"]),
                             r["peak_to_background_db"], r["dominant_freq_hz"], None])
    else:  # lens-lock
        audio = build_audio(cfg)
        lens = audio_to_lens_motion(audio, cfg.path, cfg.spl, cfg.axis_mix, cfg.timing.step)
        for res in d.residuals:
            motion = lens_lock(lens, res, cfg.geom, body=lens)
            K = cfg.frames if cfg.frames is not None else 4
            amp, _ = tone_response(freq, cfg.geom, cfg.timing, K=K, scene_seed=cfg.scene.seed,
                                   params=cfg.demons, pixel_motion=motion)
            rows.append(["lens-lock", "residual", res, amp, None, None, None])
    return DEFENSE_HEADER, rows


def run_sweep(cfg: ExperimentConfig, axis: str | None = None, values=None) -> tuple[list, list]:
    """Recovered tone amplitude (or band SNR for sample-rate) against one swept parameter."""
    axis = cfg.sweep.axis if axis is None else axis
    values = tuple(cfg.sweep.values if values is None else values)
    if not values:
        raise ConfigurationError("[sweep] values is empty")
    freq = _tone_freq(cfg, cfg.sweep.freq)
    K = cfg.frames if cfg.frames is not None else 4
    rows = []
    if axis == "sample-rate":
        sim = run_simulation(cfg)
        ch = extract(sim.frames, cfg.demons, _still(sim, cfg), cfg.groups)
        audio, _ = recover(ch, cfg.preprocess, "drop", None, cfg.select)
        for sr in values:
            w = simulate_sample_rate(audio.samples, sr, cfg.geom.rows, cfg.timing.frame_rate,
                                     cfg.timing.row_rate)
            rows.append([axis, sr, None, peak_amplitude(w),
                         band_snr_db(w, sr, freq, sr / cfg.geom.rows)])
        return SWEEP_HEADER, rows

    for v in values:
        geom, spl = cfg.geom, cfg.spl
        if axis == "resolution":
            if v != math.floor(v) or v < 2:
                raise ConfigurationError("[sweep] resolution values must be integers >= 2")
            geom = replace(geom, cols=int(v))
        elif axis == "distance":
            geom = replace(geom, distance=float(v))
        elif axis == "spl":
            spl = float(v)
        else:
            raise ConfigurationError(f"[sweep] unknown axis {axis!r}")
        amp, ch = tone_response(freq, geom, cfg.timing, spl=spl, path=cfg.path, K=K,
                                scene_seed=cfg.scene.seed, params=cfg.demons,
                                axis_mix=cfg.axis_mix)
        rows.append([axis, v, amp, float(np.abs(ch.x.mean(axis=0)).max()), None])
    return SWEEP_HEADER, rows

