"""WAV, 16-bit PGM, CSV and key-value manifest readers/writers."""

from __future__ import annotations

import csv
import re
import wave
from pathlib import Path

import numpy as np

from .errors import InputError
from .signal import AudioSignal

__all__ = [
    "write_wav",
    "read_wav",
    "write_pgm",
    "read_pgm",
    "write_csv",
    "read_csv",
    "write_manifest",
    "read_manifest",
]


def write_wav(path, audio: AudioSignal) -> None:
    """Mono PCM16 little-endian. Samples are clipped to [-1, 1] and scaled by 32767."""
    if abs(audio.sample_rate - round(audio.sample_rate)) > 1e-9:
        raise InputError(f"WAV needs an integer sample rate, got {audio.sample_rate}")
    pcm = np.round(np.clip(audio.samples, -1.0, 1.0) * 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(round(audio.sample_rate)))
        w.writeframes(pcm.tobytes())


def read_wav(path) -> AudioSignal:
    with wave.open(str(path), "rb") as w:
        if w.getsampwidth() != 2:
            raise InputError(f"{path}: only 16-bit PCM is supported")
        n_ch = w.getnchannels()
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    data = np.frombuffer(raw, dtype="<i2").astype(float) / 32767.0
    if n_ch > 1:
        data = data.reshape(-1, n_ch).mean(axis=1)
    return AudioSignal(data, rate)


def write_pgm(path, image: np.ndarray) -> None:
    """Binary P5 graymap, 16-bit big-endian, maxval 65535. ``image`` is in [0, 1]."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise InputError("PGM image must be 2-D")
    data = np.round(np.clip(img, 0.0, 1.0) * 65535).astype(">u2")
    rows, cols = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())


_PGM_HEADER = re.compile(rb"^P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


def read_pgm(path) -> np.ndarray:
    """Read a P5 graymap (8- or 16-bit) as floats in [0, 1]."""
    blob = Path(path).read_bytes()
    m = _PGM_HEADER.match(blob)
    if not m:
        raise InputError(f"{path}: not a binary PGM (P5) file")
    cols, rows, maxval = (int(g) for g in m.groups())
    dtype = ">u2" if maxval > 255 else "u1"
    count = rows * cols
    data = np.frombuffer(blob, dtype=dtype, count=count, offset=m.end())
    return data.reshape(rows, cols).astype(float) / maxval


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path):
    """Return (header, list of row lists) with numeric cells converted to float."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for row in reader:
            rows.append([_maybe_float(c) for c in row])
    return header, rows


def _maybe_float(cell):
    try:
        return float(cell)
    except ValueError:
        return cell


def write_manifest(path, entries: dict) -> None:
    """``key = value`` lines; insertion order is preserved for reproducible bytes."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
