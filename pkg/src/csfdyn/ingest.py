"""On-disk containers and validated in-memory model for velocity series,
ROI masks, and physiological traces.

File formats
------------
Series ``.csfd``
    8-byte magic ``CSFDYN01``, 4-byte little-endian header length N,
    N bytes of UTF-8 JSON (the :class:`SeriesHeader` fields), then
    ``n_frames * height * width`` float32 little-endian values,
    frame-major, row-major within each frame.
Mask ``.pgm``
    Binary PGM (P5), maxval 255, nonzero = inside the ROI. The ROI label
    round-trips through a ``# label: NAME`` comment.
Physio ``.csv``
    Header line ``t_ms,amplitude`` followed by numeric rows. Timestamps
    must be uniform; the reader rejects rather than resamples.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyMask,
    IoFailure,
    MalformedHeader,
    MalformedRow,
    NonUniformSampling,
    ValueOutOfRange,
)

MAGIC = b"CSFDYN01"

#: Frames per reconstructed cardiac cycle in a gated series.
GATED_FRAMES = 32


class Encoding(str, Enum):
    PHASE_RADIANS = "PHASE_RADIANS"
    VELOCITY_CMPS = "VELOCITY_CMPS"


class SeriesKind(str, Enum):
    CONTINUOUS_EPI = "CONTINUOUS_EPI"
    GATED_CONV = "GATED_CONV"


class RoiLabel(str, Enum):
    AQUEDUCT = "AQUEDUCT"
    SPINAL_CANAL = "SPINAL_CANAL"
    STATIC_TISSUE = "STATIC_TISSUE"
    OTHER = "OTHER"


class PhysioKind(str, Enum):
    RESP_BELT = "RESP_BELT"
    CARDIAC_PLETHYSMO = "CARDIAC_PLETHYSMO"


_HEADER_KEYS = (
    "width",
    "height",
    "n_frames",
    "pixel_spacing_x",
    "pixel_spacing_y",
    "slice_thickness",
    "venc",
    "frame_interval",
    "t0",
    "encoding",
    "series_kind",
)


@dataclass(frozen=True)
class SeriesHeader:
    """Geometry, timing, and encoding metadata of one velocity-map series.

    Spacings are mm/pixel, slice thickness mm, venc cm/s, frame interval
    and t0 ms.
    """

    width: int
    height: int
    n_frames: int
    pixel_spacing_x: float
    pixel_spacing_y: float
    slice_thickness: float
    venc: float
    frame_interval: float
    t0: float = 0.0
    encoding: Encoding = Encoding.PHASE_RADIANS
    series_kind: SeriesKind = SeriesKind.CONTINUOUS_EPI

    def __post_init__(self):
        if min(self.width, self.height, self.n_frames) < 1:
            raise ValueOutOfRange("width, height and n_frames must all be >= 1")
        if self.pixel_spacing_x <= 0 or self.pixel_spacing_y <= 0:
            raise ValueOutOfRange("pixel spacings must be positive")
        if self.slice_thickness <= 0:
            raise ValueOutOfRange("slice thickness must be positive")
        if self.venc <= 0:
            raise ValueOutOfRange("venc must be positive")
        if self.frame_interval <= 0:
            raise ValueOutOfRange("frame_interval must be positive")
        if self.series_kind is SeriesKind.GATED_CONV and self.n_frames != GATED_FRAMES:
            raise ValueOutOfRange(
                f"gated series must hold exactly {GATED_FRAMES} frames, "
                f"got {self.n_frames}"
            )

    @property
    def pixel_area(self) -> float:
        """Pixel area in mm^2."""
        return self.pixel_spacing_x * self.pixel_spacing_y

    def timestamps(self) -> np.ndarray:
        """Frame timestamps in ms: t0 + k * frame_interval."""
        return self.t0 + np.arange(self.n_frames, dtype=np.float64) * self.frame_interval

    def to_json_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _HEADER_KEYS}
        d["encoding"] = self.encoding.value
        d["series_kind"] = self.series_kind.value
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "SeriesHeader":
        missing = [k for k in _HEADER_KEYS if k not in d]
        if missing:
            raise MalformedHeader(f"header is missing keys: {', '.join(missing)}")
        try:
            return cls(
                width=int(d["width"]),
                height=int(d["height"]),
                n_frames=int(d["n_frames"]),
                pixel_spacing_x=float(d["pixel_spacing_x"]),
                pixel_spacing_y=float(d["pixel_spacing_y"]),
                slice_thickness=float(d["slice_thickness"]),
                venc=float(d["venc"]),
                frame_interval=float(d["frame_interval"]),
                t0=float(d["t0"]),
                encoding=Encoding(d["encoding"]),
                series_kind=SeriesKind(d["series_kind"]),
            )
        except (TypeError, ValueError) as exc:
            raise MalformedHeader(f"invalid header field: {exc}") from exc


@dataclass
class VelocitySeries:
    """A time-ordered stack of 2D maps plus its header.

    ``frames`` has shape (n_frames, height, width), holding phase in
    radians within [-pi, pi) or velocity in cm/s according to
    ``header.encoding``. float32 and float64 are both accepted in
    memory; the on-disk container always stores float32.
    """

    header: SeriesHeader
    frames: np.ndarray

    def __post_init__(self):
        expected = (self.header.n_frames, self.header.height, self.header.width)
        if self.frames.shape != expected:
            raise DimensionMismatch(
                f"frames shape {self.frames.shape} != header geometry {expected}"
            )
        if self.frames.dtype not in (np.float32, np.float64):
            self.frames = np.ascontiguousarray(self.frames, dtype=np.float64)
        if not np.all(np.isfinite(self.frames)):
            raise ValueOutOfRange("frames contain non-finite values")
        if self.header.encoding is Encoding.PHASE_RADIANS:
            f64 = self.frames.astype(np.float64)
            if f64.min() < -math.pi or f64.max() >= math.pi:
                raise ValueOutOfRange("phase values must lie in [-pi, pi)")

    @property
    def timestamps(self) -> np.ndarray:
        return self.header.timestamps()


@dataclass
class RoiMask:
    """Boolean pixel grid naming one region of interest."""

    pixels: np.ndarray
    label: RoiLabel = RoiLabel.OTHER

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=bool)
        if self.pixels.ndim != 2:
            raise DimensionMismatch("mask must be a 2D grid")
        if not self.pixels.any():
            raise EmptyMask("mask has no pixels set")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def n_pixels(self) -> int:
        return int(self.pixels.sum())


@dataclass
class PhysioTrace:
    """Uniformly sampled 1D physiological signal with its own clock (ms)."""

    sample_interval: float
    t0: float
    samples: np.ndarray
    kind: PhysioKind = PhysioKind.RESP_BELT

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_interval <= 0:
            raise ValueOutOfRange("sample_interval must be positive")
        if self.samples.size < 2:
            raise ValueOutOfRange("trace needs at least 2 samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueOutOfRange("trace contains non-finite values")

    @property
    def timestamps(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size, dtype=np.float64) * self.sample_interval

    @property
    def duration(self) -> float:
        """Covered time span in ms (first to last sample)."""
        return (self.samples.size - 1) * self.sample_interval


def ensure_same_grid(mask: RoiMask, header: SeriesHeader) -> None:
    """Raise DimensionMismatch unless mask and series share one pixel grid.

    Called at pairing time (flow extraction, background correction), not at
    parse time: a mask file is valid on its own.
    """
    if (mask.height, mask.width) != (header.height, header.width):
        raise DimensionMismatch(
            f"mask grid {mask.height}x{mask.width} does not match series "
            f"grid {header.height}x{header.width}"
        )


# ---------------------------------------------------------------------------
# .csfd series container


def write_series(series: VelocitySeries, path) -> None:
    """Write a series to the .csfd container. Deterministic bytes."""
    header_json = json.dumps(
        series.header.to_json_dict(), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    payload = np.ascontiguousarray(series.frames, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(header_json)))
            fh.write(header_json)
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_series(path) -> VelocitySeries:
    """Read a .csfd container back into a validated VelocitySeries."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(blob) < len(MAGIC) + 4 or blob[: len(MAGIC)] != MAGIC:
        raise MalformedHeader(f"{path}: not a CSFDYN01 container")
    (hlen,) = struct.unpack_from("<I", blob, len(MAGIC))
    body_start = len(MAGIC) + 4
    if body_start + hlen > len(blob):
        raise MalformedHeader(f"{path}: truncated header")
    try:
        header_dict = json.loads(blob[body_start : body_start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeader(f"{path}: header is not valid JSON: {exc}") from exc
    if not isinstance(header_dict, dict):
        raise MalformedHeader(f"{path}: header JSON must be an object")
    header = SeriesHeader.from_json_dict(header_dict)

    payload = blob[body_start + hlen :]
    n_values = header.n_frames * header.height * header.width
    if len(payload) != 4 * n_values:
        raise DimensionMismatch(
            f"{path}: payload holds {len(payload) // 4} values, "
            f"header promises {n_values}"
        )
    frames = np.frombuffer(payload, dtype="<f4").reshape(
        header.n_frames, header.height, header.width
    )
    return VelocitySeries(header=header, frames=frames.copy())


# ---------------------------------------------------------------------------
# .pgm ROI masks


def write_mask(mask: RoiMask, path) -> None:
    """Write a mask as binary PGM (P5), 255 = inside, with a label comment."""
    body = np.where(mask.pixels, 255, 0).astype(np.uint8).tobytes()
    head = f"P5\n# label: {mask.label.value}\n{mask.width} {mask.height}\n255\n"
    try:
        with open(path, "wb") as fh:
            fh.write(head.encode("ascii"))
            fh.write(body)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _pgm_tokens(blob: bytes, n: int) -> tuple[list[bytes], int, str | None]:
    """First n whitespace-separated PGM header tokens, the offset one byte
    past the last one, and the label comment if present."""
    tokens: list[bytes] = []
    label = None
    i = 0
    while len(tokens) < n and i < len(blob):
        c = blob[i : i + 1]
        if c == b"#":
            j = blob.find(b"\n", i)
            j = len(blob) if j < 0 else j
            comment = blob[i + 1 : j].decode("ascii", "replace").strip()
            if comment.lower().startswith("label:"):
                label = comment.split(":", 1)[1].strip()
            i = j + 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(blob) and not blob[j : j + 1].isspace() and blob[j : j + 1] != b"#":
                j += 1
            tokens.append(blob[i:j])
            i = j
    if len(tokens) < n:
        raise MalformedHeader("truncated PGM header")
    return tokens, i + 1, label


def read_mask(path, label: RoiLabel | None = None) -> RoiMask:
    """Read a binary PGM mask; nonzero pixels are inside the ROI.

    The label comes from the explicit argument if given, else from the
    ``# label:`` comment, else OTHER. Grid compatibility with a series is
    checked at pairing time, not here.
    """
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    tokens, offset, file_label = _pgm_tokens(blob, 4)
    if tokens[0] != b"P5":
        raise MalformedHeader(f"{path}: expected binary PGM (P5)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise MalformedHeader(f"{path}: non-numeric PGM header field") from exc
    if width < 1 or height < 1:
        raise MalformedHeader(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise MalformedHeader(f"{path}: PGM maxval must be in 1..255, got {maxval}")
    body = blob[offset : offset + width * height]
    if len(body) != width * height:
        raise DimensionMismatch(
            f"{path}: PGM payload holds {len(body)} pixels, expected {width * height}"
        )
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width) > 0
    if label is None and file_label is not None:
        try:
            label = RoiLabel(file_label)
        except ValueError:
            label = RoiLabel.OTHER
    if not pixels.any():
        raise EmptyMask(f"{path}: mask has no pixels set")
    return RoiMask(pixels=pixels.copy(), label=label or RoiLabel.OTHER)


# ---------------------------------------------------------------------------
# .csv physio traces


def write_physio(trace: PhysioTrace, path) -> None:
    """Write a physio trace as a two-column CSV (t_ms, amplitude)."""
    times = trace.timestamps
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("t_ms,amplitude\n")
            for t, a in zip(times.tolist(), trace.samples.tolist()):
                fh.write(f"{t!r},{a!r}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_physio(path, kind: PhysioKind = PhysioKind.RESP_BELT) -> PhysioTrace:
    """Read a two-column physio CSV into a uniformly sampled trace.

    Non-uniform timestamps (any gap deviating more than 1% from the median
    interval) are rejected, never resampled: resampling policy belongs to
    the gating stage.
    """
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise MalformedRow(f"{path}: non-ASCII content: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != "t_ms,amplitude":
        raise MalformedHeader(f"{path}: expected header line 't_ms,amplitude'")
    times = []
    amps = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise MalformedRow(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
        try:
            t = float(parts[0])
            a = float(parts[1])
        except ValueError:
            raise MalformedRow(f"{path}:{lineno}: non-numeric field") from None
        if not (math.isfinite(t) and math.isfinite(a)):
            raise MalformedRow(f"{path}:{lineno}: non-finite value")
        times.append(t)
        amps.append(a)
    if len(times) < 2:
        raise MalformedRow(f"{path}: trace needs at least 2 samples")
    t_arr = np.asarray(times, dtype=np.float64)
    gaps = np.diff(t_arr)
    interval = float(np.median(gaps))
    if interval <= 0:
        raise NonUniformSampling(f"{path}: timestamps not strictly increasing")
    if np.any(np.abs(gaps - interval) > 0.01 * interval):
        worst = int(np.argmax(np.abs(gaps - interval)))
        raise NonUniformSampling(
            f"{path}: gap at row {worst + 2} is {gaps[worst]:g} ms, "
            f"median interval {interval:g} ms"
        )
    return PhysioTrace(
        sample_interval=interval, t0=float(t_arr[0]), samples=np.asarray(amps), kind=kind
    )
