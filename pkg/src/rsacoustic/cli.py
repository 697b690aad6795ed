"""Command-line front end.

Every command reads one INI configuration (see :mod:`rsacoustic.config`),
validates it completely, and only then writes into the configured output
directory.  Each output directory carries a ``manifest.txt`` recording the
configuration hash and a SHA-256 of every file written.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .camera import ShutterTiming, make_schedule
from .config import ExperimentConfig, load_config, parse_config
from .errors import ConfigurationError, InputError, RSAcousticError
from .experiment import build_audio, run_defense, run_simulation, run_sweep
from .fileio import (read_csv, read_manifest, read_pgm, read_wav, write_csv, write_manifest,
                     write_pgm, write_wav)
from .metrics import (MetricsReport, dominant_freq_track, dominant_frequency, measure_eta_cap,
                      snr_db)
from .pipeline import extract, recover
from .recovery import PreprocessConfig, detect_activity
from .registration import ChannelSet, channels_from_video
from .renderer import FrameSequence
from .signal import AudioSignal

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

FRAME_PATTERN = "frame_{:05d}.pgm"


class _Outputs:
    """Tracks files written into one directory and emits its manifest."""

    def __init__(self, directory: Path, cfg: ExperimentConfig | None, command: str):
        self.dir = Path(directory)
        self.cfg = cfg
        self.command = command
        self.files: list[Path] = []

    def path(self, name) -> Path:
        p = self.dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(p)
        return p

    def close(self, extra: dict | None = None):
        entries = {"command": self.command, "version": __version__}
        if self.cfg is not None:
            entries["config_hash"] = self.cfg.digest
        entries.update(extra or {})
        for p in sorted(set(self.files)):
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            entries[f"file.{p.relative_to(self.dir).as_posix()}"] = digest
        self.dir.mkdir(parents=True, exist_ok=True)
        write_manifest(self.dir / "manifest.txt", entries)


def _cfg(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return parse_config("")


def _outdir(args, cfg) -> Path:
    return Path(args.output) if getattr(args, "output", None) else cfg.output_dir


def _timing_entries(timing: ShutterTiming, rows: int, cols: int) -> dict:
    return {
        "rows": rows,
        "cols": cols,
        "exposure": repr(timing.exposure),
        "row_readout": repr(timing.row_readout),
        "frame_rate": repr(float(timing.frame_rate)),
        "delta_div": timing.delta_div,
    }


def _timing_from(entries: dict) -> tuple[ShutterTiming, int, int]:
    try:
        timing = ShutterTiming(float(entries["exposure"]), float(entries["row_readout"]),
                               float(entries["frame_rate"]), int(entries["delta_div"]))
        return timing, int(entries["rows"]), int(entries["cols"])
    except (KeyError, ValueError) as exc:
        raise InputError(f"manifest lacks camera timing: {exc}") from None


# ---- writers shared by single commands and the pipeline -------------------

def _write_frames(out: _Outputs, sim, subdir="frames") -> None:
    frames = sim.frames
    for k, f in enumerate(frames.frames):
        write_pgm(out.path(f"{subdir}/{FRAME_PATTERN.format(k)}"), f)
    write_pgm(out.path(f"{subdir}/still.pgm"), sim.scene.crop())
    rows, cols = frames.shape
    entries = {"config_hash": out.cfg.digest if out.cfg else "", "frames": len(frames),
               "schedule": frames.schedule.mode, "schedule_seed": frames.schedule.seed}
    entries.update(_timing_entries(frames.timing, rows, cols))
    write_manifest(out.path(f"{subdir}/frames.manifest"), entries)


def _write_channels(out: _Outputs, ch: ChannelSet, name="channels.csv", fields=False) -> None:
    times = ch.times()
    header = ["time_s"] + ch.names()
    write_csv(out.path(name), header, ([t, *col] for t, col in zip(times, ch.data.T)))
    entries = {"config_hash": out.cfg.digest if out.cfg else "", "n_groups": ch.n_groups}
    entries.update(_timing_entries(ch.timing, ch.rows, 0))
    write_manifest(out.path(Path(name).with_suffix(".manifest").as_posix()), entries)
    if fields and ch.fields:
        for k, f in enumerate(ch.fields):
            for comp, arr in (("dx", f.dx), ("dy", f.dy)):
                cols = [f"c{j}" for j in range(arr.shape[1])]
                write_csv(out.path(f"fields/field_{k:05d}_{comp}.csv"), cols, arr.tolist())


def _read_frames(directory: Path) -> tuple[FrameSequence, np.ndarray | None]:
    man = directory / "frames.manifest"
    if not man.is_file():
        raise InputError(f"{directory}: no frames.manifest")
    entries = read_manifest(man)
    timing, rows, _ = _timing_from(entries)
    n = int(entries.get("frames", 0))
    frames = [read_pgm(directory / FRAME_PATTERN.format(k)) for k in range(n)]
    sched = make_schedule(timing, rows, entries.get("schedule", "sequential"),
                          int(entries.get("schedule_seed", 0)))
    still = directory / "still.pgm"
    return FrameSequence(np.array(frames), timing, sched), (read_pgm(still) if still.is_file()
                                                            else None)


def _read_channels(path: Path) -> ChannelSet:
    man = path.with_suffix(".manifest")
    if not man.is_file():
        raise InputError(f"{path}: missing sidecar {man.name}")
    entries = read_manifest(man)
    timing, rows, _ = _timing_from(entries)
    header, body = read_csv(path)
    data = np.array([r[1:] for r in body], dtype=float).T
    return ChannelSet(data, int(entries["n_groups"]), rows, timing)


def _write_wav(out: _Outputs, name: str, audio: AudioSignal) -> None:
    peak = np.max(np.abs(audio.samples)) if len(audio.samples) else 0.0
    samples = audio.samples / peak if peak > 1.0 else audio.samples
    write_wav(out.path(name), AudioSignal(samples, round(audio.sample_rate)))


def _report(audio: AudioSignal, true_duration: float | None = None,
            raw: AudioSignal | None = None, pre: PreprocessConfig = PreprocessConfig()
            ) -> MetricsReport:
    """Metrics for ``audio``; SNR and captured fraction use ``raw`` when given.

    ``raw`` should be the untrimmed, gap-dropped channel: trimming removes the
    inactive samples SNR needs, and zero-filled gaps would hide lost time.
    """
    base = audio if raw is None else raw
    x, rate = base.samples, base.sample_rate
    live = dict(noise_seconds=pre.noise_seconds, k=pre.liveness_k,
                window=pre.liveness_window, hysteresis=pre.hysteresis,
                rel_floor=pre.rel_floor)
    notes = []
    snr = float("nan")
    act = detect_activity(x, rate, **live)
    if act is not None and 0 < act[1] - act[0] < len(x):
        mask = np.zeros(len(x), bool)
        mask[act[0]:act[1]] = True
        snr = snr_db(x, mask)
    else:
        notes.append("no inactive segment for SNR")
    eta = float("nan")
    if true_duration:
        m = measure_eta_cap(x, rate, true_duration, **live)
        eta = m.fraction
        if not m.found:
            notes.append("no active region")

    y, rate = audio.samples, audio.sample_rate
    dom = float("nan")
    track = []
    if len(y) >= 4096:
        tr = dominant_freq_track(y, rate, fmin=20.0)
        dom = tr.dominant
        track = list(zip(tr.times.tolist(), tr.freqs.tolist()))
    elif len(y) >= 16:
        dom = dominant_frequency(y, rate, fmin=20.0)
    return MetricsReport(snr, dom, track, eta, "; ".join(notes))


# ---- commands ---------------------------------------------------------------

def cmd_synth(args) -> None:
    cfg = _cfg(args)
    audio = build_audio(cfg)
    out = _Outputs(_outdir(args, cfg), cfg, "synth")
    _write_wav(out, "audio.wav", audio)
    out.close()


def cmd_simulate(args) -> None:
    cfg = _cfg(args)
    sim = run_simulation(cfg)
    out = _Outputs(_outdir(args, cfg), cfg, "simulate")
    _write_frames(out, sim)
    out.close()


def cmd_extract(args) -> None:
    cfg = _cfg(args)
    frames_dir = Path(args.frames)
    frames, still = _read_frames(frames_dir)
    reference = still if cfg.reference == "still" else None
    ch = channels_from_video(frames, cfg.groups, cfg.demons, reference, keep_fields=args.fields)
    out = _Outputs(_outdir(args, cfg), cfg, "extract")
    _write_channels(out, ch, fields=args.fields)
    out.close()


def cmd_recover(args) -> None:
    cfg = _cfg(args)
    ch = _read_channels(Path(args.channels))
    audio, signals = recover(ch, cfg.preprocess, cfg.gap_policy, cfg.target_rate, cfg.select)
    out = _Outputs(_outdir(args, cfg), cfg, "recover")
    _write_wav(out, "recovered.wav", audio)
    names = [s.provenance["channel"] for s in signals]
    write_csv(out.path("stages/preprocessed.csv"), names,
              zip(*[s.samples for s in signals]))
    active = signals[0].provenance["active"]
    out.close({"stages": ",".join(signals[0].provenance["stages"]),
               "active": f"{active[0]}:{active[1]}" if active else "none"})


def cmd_defend(args) -> None:
    cfg = _cfg(args)
    header, rows = run_defense(cfg)
    out = _Outputs(_outdir(args, cfg), cfg, "defend")
    write_csv(out.path(f"defense_{cfg.defense.kind}.csv"), header, rows)
    out.close()


def cmd_measure(args) -> MetricsReport:
    cfg = _cfg(args) if args.config else None
    path = Path(args.signal)
    if path.suffix.lower() == ".wav":
        audio = read_wav(path)
    else:
        ch = _read_channels(path)
        audio = AudioSignal(ch.x.mean(axis=0), ch.sample_rate)
    report = _report(audio, args.true_duration, pre=cfg.preprocess if cfg else PreprocessConfig())
    text = report.to_text()
    sys.stdout.write(text)
    if args.output:
        out = _Outputs(Path(args.output), cfg, "measure")
        out.path("metrics.txt").write_text(text, encoding="utf-8")
        write_csv(out.path("metrics.csv"), MetricsReport.csv_header(), [report.csv_row()])
        out.close()
    return report


def cmd_pipeline(args) -> None:
    cfg = _cfg(args)
    audio = build_audio(cfg)
    sim = run_simulation(cfg, audio)
    reference = sim.scene.crop() if cfg.reference == "still" else None
    ch = extract(sim.frames, cfg.demons, reference, cfg.groups)
    recovered, signals = recover(ch, cfg.preprocess, cfg.gap_policy, cfg.target_rate,
                                 cfg.select)
    out = _Outputs(_outdir(args, cfg), cfg, "pipeline")
    _write_wav(out, "audio.wav", audio)
    _write_frames(out, sim)
    _write_channels(out, ch)
    _write_wav(out, "recovered.wav", recovered)
    raw = AudioSignal(ch.x.mean(axis=0), ch.sample_rate)
    duration = {"tone": cfg.audio.duration, "chirp": cfg.audio.duration}.get(cfg.audio.source)
    report = _report(recovered, duration, raw, cfg.preprocess)
    out.path("summary.txt").write_text(report.to_text(), encoding="utf-8")
    out.close({"stages": ",".join(signals[0].provenance["stages"])})


def cmd_sweep(args) -> None:
    cfg = _cfg(args)
    values = None
    if args.values:
        try:
            values = tuple(float(v) for v in args.values.split(","))
        except ValueError:
            raise ConfigurationError(f"--values is not a list of numbers: {args.values!r}")
    header, rows = run_sweep(cfg, args.axis, values)
    out = _Outputs(_outdir(args, cfg), cfg, "sweep")
    write_csv(out.path(f"sweep_{args.axis or cfg.sweep.axis}.csv"), header, rows)
    out.close()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsacoustic",
                                description="Rolling-shutter optical-acoustic side-channel "
                                            "simulator and recovery toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-c", "--config", help="INI configuration file")
        sp.add_argument("-o", "--output", help="output directory (overrides [experiment])")
        sp.set_defaults(func=func)
        return sp

    add("synth", cmd_synth, "write the configured tone/chirp as a WAV")
    add("simulate", cmd_simulate, "render rolling-shutter frames from audio")
    sp = add("extract", cmd_extract, "register frames and write channel CSV")
    sp.add_argument("frames", help="directory written by 'simulate'")
    sp.add_argument("--fields", action="store_true", help="also dump displacement fields")
    sp = add("recover", cmd_recover, "preprocess channels into a WAV")
    sp.add_argument("channels", help="channel CSV written by 'extract'")
    add("defend", cmd_defend, "run the configured defense and write a CSV report")
    sp = add("measure", cmd_measure, "print metrics for a WAV or channel CSV")
    sp.add_argument("signal")
    sp.add_argument("--true-duration", type=float, default=None,
                    help="true tone duration (s) for the captured-fraction measurement")
    add("pipeline", cmd_pipeline, "synth, simulate, extract, recover and measure")
    sp = add("sweep", cmd_sweep, "sweep one camera or audio parameter")
    sp.add_argument("--axis", choices=["resolution", "spl", "distance", "sample-rate"])
    sp.add_argument("--values", help="comma-separated values (overrides [sweep])")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RSAcousticError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
