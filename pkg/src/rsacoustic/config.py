"""INI-style experiment configuration.

Every section and key is optional; defaults reproduce a Pixel-2-like camera
filming a textured scene next to a 200 Hz tone.  Parsing builds every model
object up front, so an invalid file is rejected before any output exists.

Grammar: ``[section]`` headers, ``key = value`` lines, ``#`` or ``;``
comments, UTF-8.  Lists are comma separated.  Recognised sections and keys:

``[experiment]``   output_dir, seed
``[camera]``       preset, rows, cols, exposure, row_rate, frame_rate,
                   delta_div, sensor_width, focal_length, distance,
                   schedule (sequential | random-coded), schedule_seed, frames,
                   read_noise (Gaussian pixel noise std, intensities in [0, 1])
``[mechanics]``    mode (flat | table), flat_gain, table (f:g pairs),
                   cutoff (brick-wall table at this frequency), spl, spl_ref,
                   stroke_limit, axis_mix (x, y, z weights)
``[audio]``        source (tone | chirp | wav), freq, f0, f1, duration,
                   sample_rate, amplitude, lead, path
``[scene]``        source (texture | image), seed, sigma, ramp, margin, path
``[registration]`` sigma_fluid, sigma_diffusion, iterations, tol, patience,
                   levels, groups, reference (frame0 | still)
``[recovery]``     denoise, liveness, trim, lowpass, normalize, noise_seconds,
                   liveness_k, cutoff, oversubtract, gap_policy, target_rate,
                   select
``[defense]``      kind (sample-rate | random-coded | lens-lock | vcm),
                   sample_rates, seeds, residuals, freq, spring_constants
``[vcm]``          R, V, f_fric, c_l, x, m, N_w, l_w, B_g, A_coil, rho, L_coil
``[sweep]``        axis (resolution | spl | distance | sample-rate), values, freq
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .camera import PRESETS, SensorGeometry, ShutterTiming
from .defense import VcmDesign
from .errors import ConfigurationError, RSAcousticError
from .recovery import PreprocessConfig
from .registration import DemonsParams
from .signal import MechanicalPath, brickwall_table

__all__ = ["ExperimentConfig", "load_config", "parse_config"]

SECTIONS = {
    "experiment": {"output_dir", "seed"},
    "camera": {"preset", "rows", "cols", "exposure", "row_rate", "frame_rate", "delta_div",
               "sensor_width", "focal_length", "distance", "schedule", "schedule_seed",
               "frames", "read_noise"},
    "mechanics": {"mode", "flat_gain", "table", "cutoff", "spl", "spl_ref", "stroke_limit",
                  "axis_mix"},
    "audio": {"source", "freq", "f0", "f1", "duration", "sample_rate", "amplitude", "lead",
              "path"},
    "scene": {"source", "seed", "sigma", "ramp", "margin", "path"},
    "registration": {"sigma_fluid", "sigma_diffusion", "iterations", "tol", "patience",
                     "levels", "groups", "reference"},
    "recovery": {"denoise", "liveness", "trim", "lowpass", "normalize", "noise_seconds",
                 "liveness_k", "cutoff", "oversubtract", "gap_policy", "target_rate",
                 "select"},
    "defense": {"kind", "sample_rates", "seeds", "residuals", "freq", "spring_constants"},
    "vcm": {"R", "V", "f_fric", "c_l", "x", "m", "N_w", "l_w", "B_g", "A_coil", "rho",
            "L_coil"},
    "sweep": {"axis", "values", "freq"},
}

# A plausible phone VCM: F_e = 0.02 N, net force 0.0052 N at g = 9.8.
DEFAULT_VCM = dict(R=10.0, V=2.0, f_fric=0.001, c_l=40.0, x=1e-4, m=0.001, N_w=10.0,
                   l_w=0.01, B_g=0.5, A_coil=2e-8, rho=2e-8, L_coil=5.0)


@dataclass(frozen=True)
class AudioSpec:
    source: str = "tone"
    freq: float = 200.0
    f0: float = 50.0
    f1: float = 650.0
    duration: float = 1.0
    sample_rate: float = 48000.0
    amplitude: float = 1.0
    lead: float = 0.0
    path: str | None = None


@dataclass(frozen=True)
class SceneSpec:
    source: str = "texture"
    seed: int = 0
    sigma: float = 1.5
    ramp: float = 0.0
    margin: int | None = None
    path: str | None = None


@dataclass(frozen=True)
class DefenseSpec:
    kind: str = "sample-rate"
    sample_rates: tuple = ()  # empty: 1, 2, 10 and 20 times the camera row rate
    seeds: tuple = (1, 2, 3, 4, 5)
    residuals: tuple = (0.0, 0.1, 0.5, 1.0)
    freq: float | None = None
    spring_constants: tuple = (40.0, 60.0, 80.0)


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "resolution"
    values: tuple = ()
    freq: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    output_dir: Path
    seed: int
    geom: SensorGeometry
    timing: ShutterTiming
    schedule_mode: str
    schedule_seed: int
    frames: int | None
    read_noise: float
    path: MechanicalPath
    spl: float
    axis_mix: tuple
    audio: AudioSpec
    scene: SceneSpec
    demons: DemonsParams
    groups: int | None
    reference: str
    preprocess: PreprocessConfig
    gap_policy: str
    target_rate: float | None
    select: int | None
    defense: DefenseSpec
    vcm: VcmDesign
    sweep: SweepSpec
    digest: str = field(default="")


class _Section:
    def __init__(self, parser, name):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else {}

    def _raw(self, key):
        return self.data.get(key.lower())

    def _fail(self, key, msg):
        raise ConfigurationError(f"[{self.name}] {key}: {msg}")

    def str(self, key, default=None, choices=None):
        v = self._raw(key)
        if v is None or v == "":
            return default
        if choices is not None and v not in choices:
            self._fail(key, f"expected one of {sorted(choices)}, got {v!r}")
        return v

    def float(self, key, default=None, lo=None, lo_open=False):
        v = self._raw(key)
        if v is None or v == "":
            return default
        try:
            x = float(v)
        except ValueError:
            self._fail(key, f"not a number: {v!r}")
        if x != x or x in (float("inf"), float("-inf")):
            self._fail(key, "must be finite")
        if lo is not None and (x < lo or (lo_open and x == lo)):
            self._fail(key, f"must be {'>' if lo_open else '>='} {lo}")
        return x

    def int(self, key, default=None, lo=None):
        v = self._raw(key)
        if v is None or v == "":
            return default
        try:
            x = int(v)
        except ValueError:
            self._fail(key, f"not an integer: {v!r}")
        if lo is not None and x < lo:
            self._fail(key, f"must be >= {lo}")
        return x

    def bool(self, key, default):
        v = self._raw(key)
        if v is None or v == "":
            return default
        low = v.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        self._fail(key, f"not a boolean: {v!r}")

    def floats(self, key, default=()):
        v = self._raw(key)
        if v is None or v == "":
            return tuple(default)
        try:
            return tuple(float(p) for p in v.split(",") if p.strip())
        except ValueError:
            self._fail(key, f"not a list of numbers: {v!r}")

    def pairs(self, key):
        v = self._raw(key)
        if v is None or v == "":
            return None
        out = []
        for item in v.split(","):
            f, sep, g = item.partition(":")
            if not sep:
                self._fail(key, f"expected freq:gain pairs, got {item!r}")
            try:
                out.append((float(f), float(g)))
            except ValueError:
                self._fail(key, f"bad pair {item!r}")
        return tuple(out)


def _check_keys(parser):
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigurationError(f"unknown section [{name}]")
        allowed = {k.lower() for k in SECTIONS[name]}
        for key in parser[name]:
            if key not in allowed:
                raise ConfigurationError(f"[{name}] unknown key {key!r}")


def _digest(parser) -> str:
    canon = []
    for name in sorted(parser.sections()):
        for key in sorted(parser[name]):
            canon.append(f"{name}.{key}={parser[name][key].strip()}")
    return hashlib.sha256("\n".join(canon).encode("utf-8")).hexdigest()[:16]


def parse_config(text: str, base_dir: Path | str = ".") -> ExperimentConfig:
    """Parse and validate configuration text; relative paths resolve against ``base_dir``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed configuration: {exc}") from None
    _check_keys(parser)
    base_dir = Path(base_dir)
    try:
        return _build(parser, base_dir)
    except ConfigurationError:
        raise
    except RSAcousticError as exc:
        raise ConfigurationError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    return parse_config(text, path.parent)


def _resolve(base_dir, p):
    if p is None:
        return None
    q = Path(p)
    return q if q.is_absolute() else base_dir / q


def _build(parser, base_dir) -> ExperimentConfig:
    exp = _Section(parser, "experiment")
    cam = _Section(parser, "camera")
    mech = _Section(parser, "mechanics")
    aud = _Section(parser, "audio")
    scn = _Section(parser, "scene")
    reg = _Section(parser, "registration")
    rec = _Section(parser, "recovery")
    dfn = _Section(parser, "defense")
    vcm = _Section(parser, "vcm")
    swp = _Section(parser, "sweep")

    seed = exp.int("seed", 0, lo=0)
    output_dir = _resolve(base_dir, exp.str("output_dir", "out"))

    name = cam.str("preset", "pixel2", choices=set(PRESETS) | {"custom"})
    rows = cam.int("rows", 1080, lo=2)
    cols = cam.int("cols", 1920, lo=2)
    exposure = cam.float("exposure", 1e-3, lo=0, lo_open=True)
    delta_div = cam.int("delta_div", 4, lo=1)
    if name == "custom":
        row_rate = cam.float("row_rate", None, lo=0, lo_open=True)
        frame_rate = cam.float("frame_rate", None, lo=0, lo_open=True)
        if row_rate is None or frame_rate is None:
            raise ConfigurationError("[camera] a custom camera needs row_rate and frame_rate")
    else:
        row_rate, frame_rate = PRESETS[name]["row_rate"], PRESETS[name]["fps"]
        row_rate = cam.float("row_rate", row_rate, lo=0, lo_open=True)
        frame_rate = cam.float("frame_rate", frame_rate, lo=0, lo_open=True)
    timing = ShutterTiming.from_rates(exposure, row_rate, frame_rate, delta_div)
    timing.check(rows)
    default_geom = SensorGeometry(rows, cols)
    geom = SensorGeometry(
        rows, cols,
        sensor_width=cam.float("sensor_width", default_geom.sensor_width, lo=0, lo_open=True),
        focal_length=cam.float("focal_length", default_geom.focal_length, lo=0, lo_open=True),
        distance=cam.float("distance", default_geom.distance, lo=0, lo_open=True),
    )
    schedule_mode = cam.str("schedule", "sequential", choices={"sequential", "random-coded"})
    schedule_seed = cam.int("schedule_seed", seed, lo=0)
    frames = cam.int("frames", None, lo=1)
    read_noise = cam.float("read_noise", 0.0, lo=0)

    mode = mech.str("mode", "flat", choices={"flat", "table"})
    table = mech.pairs("table")
    cutoff = mech.float("cutoff", None, lo=0, lo_open=True)
    flat_gain = mech.float("flat_gain", 2.24, lo=0, lo_open=True)
    if mode == "table" and table is None:
        table = brickwall_table(cutoff if cutoff is not None else 600.0, flat_gain)
    path = MechanicalPath(
        mode, flat_gain=flat_gain, response_table=table or (),
        stroke_limit=mech.float("stroke_limit", 100.0, lo=0, lo_open=True),
        spl_ref=mech.float("spl_ref", 58.0),
    )
    spl = mech.float("spl", path.spl_ref)
    axis_mix = mech.floats("axis_mix", (1.0, 0.0, 0.0))
    if len(axis_mix) != 3:
        raise ConfigurationError("[mechanics] axis_mix needs three weights")

    source = aud.str("source", "tone", choices={"tone", "chirp", "wav"})
    audio = AudioSpec(
        source=source,
        freq=aud.float("freq", 200.0, lo=0, lo_open=True),
        f0=aud.float("f0", 50.0, lo=0, lo_open=True),
        f1=aud.float("f1", 650.0, lo=0, lo_open=True),
        duration=aud.float("duration", 1.0, lo=0, lo_open=True),
        sample_rate=aud.float("sample_rate", 48000.0, lo=0, lo_open=True),
        amplitude=aud.float("amplitude", 1.0, lo=0),
        lead=aud.float("lead", 0.0, lo=0),
        path=None if aud.str("path") is None else str(_resolve(base_dir, aud.str("path"))),
    )
    if audio.sample_rate != round(audio.sample_rate):
        raise ConfigurationError("[audio] sample_rate must be a whole number of Hz")
    if source == "wav":
        if audio.path is None:
            raise ConfigurationError("[audio] source = wav needs a path")
        if not Path(audio.path).is_file():
            raise ConfigurationError(f"[audio] path does not exist: {audio.path}")
    nyq = audio.sample_rate / 2
    if source == "tone" and audio.freq >= nyq:
        raise ConfigurationError("[audio] freq must lie below the Nyquist frequency")
    if source == "chirp" and not audio.f0 < audio.f1 < nyq:
        raise ConfigurationError("[audio] chirp needs f0 < f1 < sample_rate / 2")

    scene = SceneSpec(
        source=scn.str("source", "texture", choices={"texture", "image"}),
        seed=scn.int("seed", seed, lo=0),
        sigma=scn.float("sigma", 1.5, lo=0),
        ramp=scn.float("ramp", 0.0, lo=0),
        margin=scn.int("margin", None, lo=0),
        path=None if scn.str("path") is None else str(_resolve(base_dir, scn.str("path"))),
    )
    if scene.source == "image":
        if scene.path is None or not Path(scene.path).is_file():
            raise ConfigurationError(f"[scene] image path does not exist: {scene.path}")
        if scene.margin is None:
            raise ConfigurationError("[scene] an image scene needs an explicit margin")

    demons = DemonsParams(
        sigma_fluid=reg.float("sigma_fluid", 1.0, lo=0),
        sigma_diffusion=reg.float("sigma_diffusion", 1.0, lo=0),
        iterations=reg.int("iterations", 50, lo=1),
        tol=reg.float("tol", 1e-4, lo=0),
        patience=reg.int("patience", 5, lo=1),
        levels=reg.int("levels", 2, lo=1),
    )
    groups = reg.int("groups", None, lo=1)
    if groups is not None and groups > cols:
        raise ConfigurationError("[registration] groups cannot exceed the column count")
    reference = reg.str("reference", "frame0", choices={"frame0", "still"})

    pre = PreprocessConfig(
        denoise=rec.bool("denoise", True),
        liveness=rec.bool("liveness", True),
        trim=rec.bool("trim", True),
        lowpass=rec.bool("lowpass", True),
        normalize=rec.bool("normalize", True),
        noise_seconds=rec.float("noise_seconds", 0.25, lo=0, lo_open=True),
        liveness_k=rec.float("liveness_k", 3.0, lo=0, lo_open=True),
        cutoff=rec.float("cutoff", 4000.0, lo=0, lo_open=True),
        oversubtract=rec.float("oversubtract", 2.0, lo=0),
    )
    gap_policy = rec.str("gap_policy", "drop", choices={"drop", "zero-fill"})
    target_rate = rec.float("target_rate", None, lo=0, lo_open=True)
    if target_rate is not None and target_rate != round(target_rate):
        raise ConfigurationError("[recovery] target_rate must be a whole number of Hz")
    select = rec.int("select", None, lo=0)

    defense = DefenseSpec(
        kind=dfn.str("kind", "sample-rate",
                     choices={"sample-rate", "random-coded", "lens-lock", "vcm"}),
        sample_rates=dfn.floats("sample_rates", tuple(row_rate * m for m in (1, 2, 10, 20))),
        seeds=tuple(int(round(s)) for s in dfn.floats("seeds", DefenseSpec.seeds)),
        residuals=dfn.floats("residuals", DefenseSpec.residuals),
        freq=dfn.float("freq", None, lo=0, lo_open=True),
        spring_constants=dfn.floats("spring_constants", DefenseSpec.spring_constants),
    )
    if any(s < 0 or s != round(s) for s in dfn.floats("seeds", ())):
        raise ConfigurationError("[defense] seeds must be non-negative integers")
    for r in defense.residuals:
        if not 0 <= r <= 1:
            raise ConfigurationError("[defense] residuals must lie in [0, 1]")
    eta_cap = rows * frame_rate / row_rate
    for sr in defense.sample_rates:
        if rows * frame_rate / sr > eta_cap * (1 + 1e-12):
            raise ConfigurationError(f"[defense] sample rate {sr} is below the camera's row rate")
    vcm_design = VcmDesign(**{k: vcm.float(k, v) for k, v in DEFAULT_VCM.items()})

    sweep = SweepSpec(
        axis=swp.str("axis", "resolution",
                     choices={"resolution", "spl", "distance", "sample-rate"}),
        values=swp.floats("values", ()),
        freq=swp.float("freq", None, lo=0, lo_open=True),
    )

    if sweep.axis == "sample-rate":
        for sr in sweep.values:
            if rows * frame_rate / sr > eta_cap * (1 + 1e-12):
                raise ConfigurationError(f"[sweep] sample rate {sr} is below the camera's row rate")

    return ExperimentConfig(
        output_dir=output_dir, seed=seed, geom=geom, timing=timing,
        schedule_mode=schedule_mode, schedule_seed=schedule_seed, frames=frames,
        read_noise=read_noise,
        path=path, spl=spl, axis_mix=axis_mix, audio=audio, scene=scene, demons=demons,
        groups=groups, reference=reference, preprocess=pre, gap_policy=gap_policy,
        target_rate=target_rate, select=select, defense=defense, vcm=vcm_design,
        sweep=sweep, digest=_digest(parser),
    )
