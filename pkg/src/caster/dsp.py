"""Narrowband series, time-Doppler spectrograms and export formats.

With a 5 MHz-class signal bandwidth the multipath delay spread is far
below one symbol, so each snapshot's rays collapse coherently into a
single complex sample. A short-time Fourier transform of that series over
a sliding window gives the two-sided Doppler spectrogram.

Binary export format "CSTR" (binary_matrix_v1), little endian:

    bytes 0..3    magic "CSTR"
    u32           version (1)
    u32           F rows (frequency bins)
    u32           M columns (time steps)
    f64           f_min, f64 f_max   frequency axis ends, Hz
    f64           t_step             column spacing, seconds
    f64 x F*M     magnitude in dB, row major

PNG export is 8-bit grayscale, min-max normalized per clip, frequency
increasing upward, time left to right.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import IoFailure, SeriesTooShort

CSTR_MAGIC = b"CSTR"
CSTR_VERSION = 1
DB_FLOOR_RANGE = 120.0

CLUTTER_MODES = ("none", "subtract_mean", "subtract_static")


@dataclass(frozen=True)
class NarrowbandSeries:
    """Complex channel sample per snapshot at a fixed rate."""

    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples",
                           np.asarray(self.samples, dtype=complex))
        if not self.sample_rate > 0.0:
            raise ValueError("sample_rate must be positive")
        if self.samples.ndim != 1:
            raise ValueError("samples must be a vector")
        if not np.all(np.isfinite(self.samples.view(float))):
            raise ValueError("samples must be finite")


@dataclass(frozen=True)
class StftConfig:
    """Analysis window length, hop and shape; fft_length >= window_length."""

    window_length: int = 250
    hop: int = 25
    window_shape: str = "hann"
    fft_length: int | None = None

    def __post_init__(self):
        if self.fft_length is None:
            object.__setattr__(self, "fft_length", self.window_length)
        if not 0 < self.hop <= self.window_length <= self.fft_length:
            raise ValueError("need 0 < hop <= window_length <= fft_length")
        if self.window_shape not in ("rectangular", "hann"):
            raise ValueError(f"unknown window shape {self.window_shape!r}")

    def window(self) -> np.ndarray:
        if self.window_shape == "rectangular":
            return np.ones(self.window_length)
        return np.hanning(self.window_length)


@dataclass(frozen=True)
class Spectrogram:
    """Time-Doppler magnitude in dB with axis metadata.

    magnitude_db is (F, M): F two-sided frequency bins (ascending, 0 Hz
    centered) by M time columns. Values are absolute dB, floored 120 dB
    below the clip maximum.
    """

    magnitude_db: np.ndarray
    frequency_axis: np.ndarray
    time_axis: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "magnitude_db",
                           np.asarray(self.magnitude_db, dtype=float))
        object.__setattr__(self, "frequency_axis",
                           np.asarray(self.frequency_axis, dtype=float))
        object.__setattr__(self, "time_axis",
                           np.asarray(self.time_axis, dtype=float))
        f, m = self.magnitude_db.shape
        if self.frequency_axis.shape != (f,) or self.time_axis.shape != (m,):
            raise ValueError("axis lengths do not match the matrix")
        if not np.all(np.isfinite(self.magnitude_db)):
            raise ValueError("magnitude_db must be finite")


def collapse(snapshot) -> complex:
    """Coherent sum of all ray coefficients of one snapshot."""
    return snapshot.collapse()


def series_from_parts(moving, static_sum: complex,
                      sample_rate: float) -> NarrowbandSeries:
    """Assemble the snapshot series from the per-snapshot moving sums and
    the constant static component."""
    return NarrowbandSeries(sample_rate, np.asarray(moving, dtype=complex) + static_sum)


def remove_clutter(series: NarrowbandSeries, mode: str = "none",
                   static_sum: complex | None = None) -> NarrowbandSeries:
    """Suppress the stationary part of the series.

    none            pass through unchanged
    subtract_mean   subtract the complex temporal mean
    subtract_static subtract the known time-invariant component
    """
    if mode == "none":
        return series
    if mode == "subtract_mean":
        return NarrowbandSeries(series.sample_rate,
                                series.samples - np.mean(series.samples))
    if mode == "subtract_static":
        if static_sum is None:
            raise ValueError("subtract_static needs the static component")
        return NarrowbandSeries(series.sample_rate, series.samples - static_sum)
    raise ValueError(f"unknown clutter mode {mode!r}")


def stft(series: NarrowbandSeries, config: StftConfig, label: str = "") -> Spectrogram:
    """Two-sided spectrogram of the complex series.

    Columns cover [c*hop, c*hop + window); the frequency axis is
    fftshifted so 0 Hz sits at the center, positive Doppler above.
    """
    x = series.samples
    w = config.window_length
    if x.shape[0] < w:
        raise SeriesTooShort(f"series of {x.shape[0]} samples needs >= {w}")
    n_cols = (x.shape[0] - w) // config.hop + 1
    win = config.window()
    starts = np.arange(n_cols) * config.hop
    segs = x[starts[:, None] + np.arange(w)] * win
    spec = np.fft.fft(segs, n=config.fft_length, axis=1)
    mag = np.abs(np.fft.fftshift(spec, axes=1)).T  # (F, M)

    peak = float(np.max(mag))
    if peak > 0.0:
        floor_db = 20.0 * np.log10(peak) - DB_FLOOR_RANGE
        mag_db = 20.0 * np.log10(np.maximum(mag, 10.0 ** (floor_db / 20.0)))
    else:
        mag_db = np.full(mag.shape, -DB_FLOOR_RANGE)

    freqs = np.fft.fftshift(np.fft.fftfreq(config.fft_length,
                                           d=1.0 / series.sample_rate))
    times = (starts + w / 2.0) / series.sample_rate
    return Spectrogram(mag_db, freqs, times, label=label)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    body = tag + payload
    return struct.pack(">I", len(payload)) + body \
        + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def _write_grayscale_png(path, image: np.ndarray) -> None:
    """Minimal deterministic 8-bit grayscale PNG writer."""
    h, w = image.shape
    raw = b"".join(b"\x00" + image[r].tobytes() for r in range(h))
    header = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    blob = (b"\x89PNG\r\n\x1a\n"
            + _png_chunk(b"IHDR", header)
            + _png_chunk(b"IDAT", zlib.compress(raw, 9))
            + _png_chunk(b"IEND", b""))
    with open(path, "wb") as fh:
        fh.write(blob)


def to_grayscale(spec: Spectrogram) -> np.ndarray:
    """Min-max normalize to u8, frequency increasing upward (row 0 = top)."""
    mat = spec.magnitude_db
    lo = float(np.min(mat))
    hi = float(np.max(mat))
    if hi > lo:
        img = np.round((mat - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        img = np.full(mat.shape, 128, dtype=np.uint8)
    return img[::-1, :]


def export(spec: Spectrogram, path, fmt: str) -> None:
    """Write a spectrogram as png_grayscale or binary_matrix_v1 ("CSTR")."""
    try:
        if fmt == "png_grayscale":
            _write_grayscale_png(path, to_grayscale(spec))
        elif fmt == "binary_matrix_v1":
            f, m = spec.magnitude_db.shape
            t_step = float(spec.time_axis[1] - spec.time_axis[0]) if m > 1 else 0.0
            header = CSTR_MAGIC + struct.pack(
                "<IIIddd", CSTR_VERSION, f, m,
                float(spec.frequency_axis[0]), float(spec.frequency_axis[-1]), t_step)
            with open(path, "wb") as fh:
                fh.write(header)
                fh.write(np.ascontiguousarray(spec.magnitude_db,
                                              dtype="<f8").tobytes())
        else:
            raise ValueError(f"unknown export format {fmt!r}")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_cstr(path):
    """Read a binary_matrix_v1 file back: (matrix, f_min, f_max, t_step)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(blob) < 40 or blob[:4] != CSTR_MAGIC:
        raise IoFailure(f"{path}: not a CSTR file")
    version, f, m, f_min, f_max, t_step = struct.unpack("<IIIddd", blob[4:40])
    if version != CSTR_VERSION:
        raise IoFailure(f"{path}: unsupported CSTR version {version}")
    expected = 40 + f * m * 8
    if len(blob) != expected:
        raise IoFailure(f"{path}: size {len(blob)} != expected {expected}")
    mat = np.frombuffer(blob[40:], dtype="<f8").reshape(f, m)
    return mat, f_min, f_max, t_step
