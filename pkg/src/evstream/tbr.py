"""Temporal binary frame encoding.

Eight consecutive per-pixel event-presence bitmaps, each covering one bin of
duration bin_us, pack into a single 8-bit greyscale frame. Frames are then
cropped horizontally and zero-padded vertically to a fixed square size suited
to convolutional feature extractors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from evstream.errors import ConfigError
from evstream.events import EventStream, SensorGeometry

BITS_PER_FRAME = 8


@dataclass(frozen=True)
class TbrConfig:
    bin_us: int = 4166          # 8 bins ~ 33.3 ms, a 30 fps-equivalent frame
    bit_order: str = "msb"      # earliest bin in the most significant bit
    crop_width: int = 227
    pad_height: int = 227

    def __post_init__(self):
        if self.bin_us <= 0:
            raise ConfigError("bin_us must be positive")
        if self.bit_order not in ("msb", "lsb"):
            raise ConfigError(f"bit_order must be 'msb' or 'lsb', got {self.bit_order!r}")

    @property
    def frame_span_us(self) -> int:
        return self.bin_us * BITS_PER_FRAME


@dataclass
class TbrFrame:
    pixels: np.ndarray   # uint8, (pad_height, crop_width)
    frame_start_us: int

    @property
    def nonzero_pixels(self) -> int:
        return int(np.count_nonzero(self.pixels))


def binary_bin(x, y, geometry: SensorGeometry) -> np.ndarray:
    """Presence map for one bin: 1 where at least one event of either
    polarity hit the pixel."""
    out = np.zeros((geometry.height, geometry.width), dtype=np.uint8)
    out[np.asarray(y, dtype=np.int64), np.asarray(x, dtype=np.int64)] = 1
    return out


def _bit_weights(cfg: TbrConfig) -> np.ndarray:
    if cfg.bit_order == "msb":
        return np.array([1 << (BITS_PER_FRAME - 1 - j) for j in range(BITS_PER_FRAME)],
                        dtype=np.uint8)
    return np.array([1 << j for j in range(BITS_PER_FRAME)], dtype=np.uint8)


def pack_frame(bins: Sequence[np.ndarray], cfg: TbrConfig,
               frame_start_us: int = 0) -> TbrFrame:
    """Assemble 8 binary maps (earliest first) into one cropped/padded frame."""
    if len(bins) != BITS_PER_FRAME:
        raise ConfigError(f"pack_frame needs exactly {BITS_PER_FRAME} bins, got {len(bins)}")
    h, w = bins[0].shape
    full = np.zeros((h, w), dtype=np.uint8)
    for weight, b in zip(_bit_weights(cfg), bins):
        if b.shape != (h, w):
            raise ConfigError("bin geometry mismatch")
        full |= (b.astype(np.uint8) * weight)
    out = np.zeros((cfg.pad_height, cfg.crop_width), dtype=np.uint8)
    ch = min(h, cfg.pad_height)
    cw = min(w, cfg.crop_width)
    out[:ch, :cw] = full[:ch, :cw]
    return TbrFrame(out, frame_start_us)


def decode_frame(frame: TbrFrame, cfg: TbrConfig,
                 geometry: SensorGeometry) -> list[np.ndarray]:
    """Recover the 8 binary maps from a frame (the region surviving the crop;
    bits are exact there)."""
    ch = min(geometry.height, cfg.pad_height)
    cw = min(geometry.width, cfg.crop_width)
    region = frame.pixels[:ch, :cw]
    bins = []
    for weight in _bit_weights(cfg):
        full = np.zeros((geometry.height, geometry.width), dtype=np.uint8)
        full[:ch, :cw] = (region & weight) > 0
        bins.append(full)
    return bins


def encode_stream(stream: EventStream, cfg: TbrConfig,
                  zero_fill_partial: bool = False) -> list[TbrFrame]:
    """Encode the whole stream; frame k covers [k*8*bin_us, (k+1)*8*bin_us).

    A trailing frame with fewer than 8 populated bins is dropped unless
    zero_fill_partial is set, in which case missing bins are zero."""
    if len(stream) == 0:
        return []
    span = cfg.frame_span_us
    t_end = max(stream.t_end, int(stream.ts[-1]) + 1)
    n_frames = -(-t_end // span) if zero_fill_partial else t_end // span
    frames = []
    for k in range(n_frames):
        start = k * span
        edges = start + cfg.bin_us * np.arange(BITS_PER_FRAME + 1)
        idx = np.searchsorted(stream.ts, edges, side="left")
        bins = [binary_bin(stream.x[idx[j]:idx[j + 1]], stream.y[idx[j]:idx[j + 1]],
                           stream.geometry)
                for j in range(BITS_PER_FRAME)]
        frames.append(pack_frame(bins, cfg, frame_start_us=int(start)))
    return frames


def write_pgm(frame: TbrFrame, path) -> None:
    """Binary 8-bit PGM (P5)."""
    h, w = frame.pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ConfigError(f"{path} is not a binary PGM")
    parts = data.split(b"\n", 3)
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)


def write_png(frame: TbrFrame, path) -> None:
    from PIL import Image
    Image.fromarray(frame.pixels, mode="L").save(path)


def export_frames(frames: Sequence[TbrFrame], outdir, png: bool = False) -> Path:
    """Write frame_<index>_<start_us>.pgm files plus a manifest CSV; returns
    the manifest path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = outdir / "frames.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "start_us", "nonzero_pixels"])
        for i, frame in enumerate(frames):
            name = f"frame_{i:05d}_{frame.frame_start_us}.pgm"
            write_pgm(frame, outdir / name)
            if png:
                write_png(frame, outdir / name.replace(".pgm", ".png"))
            writer.writerow([i, frame.frame_start_us, frame.nonzero_pixels])
    return manifest
