"""Square region-of-interest features from event activity.

Per fixed time interval, the columns and rows with enough events define a
square ROI; each interval yields (center_x, center_y, size, active_pct).
Sequences can be zero-centred per recording and mirrored for augmentation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from evstream.errors import NormalizationError
from evstream.events import EventStream, SensorGeometry, packetize

NUMERIC_FIELDS = ("center_x", "center_y", "size", "active_pct")


@dataclass(frozen=True)
class RoiConfig:
    interval_us: int = 30_000
    activity_threshold: int = 3   # events per row/column to count as active
    min_events: int = 10          # events per interval to emit a detection

    def __post_init__(self):
        if self.interval_us <= 0:
            raise ValueError("interval_us must be positive")
        if self.activity_threshold < 1:
            raise ValueError("activity_threshold must be >= 1")


@dataclass(frozen=True)
class RoiFeature:
    interval_start_us: int
    valid: bool
    center_x: float = 0.0
    center_y: float = 0.0
    size: float = 0.0
    active_pct: float = 0.0


def _active_span(counts: np.ndarray, threshold: int):
    active = np.nonzero(counts >= threshold)[0]
    if len(active) == 0:
        return None
    return int(active[0]), int(active[-1])


def detect_roi(x, y, geometry: SensorGeometry, cfg: RoiConfig,
               interval_start_us: int = 0) -> RoiFeature:
    """Detect the square ROI for one interval's events.

    The square spans the active column/row extents; the shorter axis is
    expanded symmetrically about its midpoint, and border clipping shrinks
    the covered region rather than shifting it."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    invalid = RoiFeature(interval_start_us, valid=False)
    if len(x) < cfg.min_events:
        return invalid
    col_span = _active_span(np.bincount(x, minlength=geometry.width), cfg.activity_threshold)
    row_span = _active_span(np.bincount(y, minlength=geometry.height), cfg.activity_threshold)
    if col_span is None or row_span is None:
        return invalid
    c0, c1 = col_span
    r0, r1 = row_span
    span_w = c1 - c0 + 1
    span_h = r1 - r0 + 1
    size = max(span_w, span_h)
    if span_h < size:
        ext = size - span_h
        r0 -= ext // 2
        r1 += ext - ext // 2
    elif span_w < size:
        ext = size - span_w
        c0 -= ext // 2
        c1 += ext - ext // 2
    center_x = (c0 + c1) / 2.0
    center_y = (r0 + r1) / 2.0
    # clip the covered region at the sensor border
    c0c, c1c = max(0, c0), min(geometry.width - 1, c1)
    r0c, r1c = max(0, r0), min(geometry.height - 1, r1)
    area = (c1c - c0c + 1) * (r1c - r0c + 1)
    inside = (x >= c0c) & (x <= c1c) & (y >= r0c) & (y <= r1c)
    active_pixels = len(np.unique(x[inside] * geometry.height + y[inside]))
    return RoiFeature(interval_start_us, valid=True,
                      center_x=center_x, center_y=center_y, size=float(size),
                      active_pct=100.0 * active_pixels / area)


def extract_sequence(stream: EventStream, cfg: RoiConfig) -> list[RoiFeature]:
    """One feature per interval at fixed cadence; intervals without a
    detection yield invalid placeholders so the cadence never breaks."""
    packets = packetize(stream, cfg.interval_us)
    duration = stream.t_end - stream.t_start
    n_intervals = duration // cfg.interval_us
    features = []
    for p in packets[:n_intervals] if n_intervals else []:
        features.append(detect_roi(p.x, p.y, stream.geometry, cfg,
                                   interval_start_us=p.window_start_us))
    # trailing intervals with no packets (possible on short streams)
    while len(features) < n_intervals:
        start = stream.t_start + len(features) * cfg.interval_us
        features.append(RoiFeature(start, valid=False))
    return features


def zero_center(features: Sequence[RoiFeature]) -> tuple[list[RoiFeature], dict[str, float]]:
    """Subtract each numeric field's mean over valid features; invalid
    entries are untouched. Returns (normalized features, subtracted means)."""
    valid = [f for f in features if f.valid]
    if not valid:
        raise NormalizationError("zero_center needs at least one valid feature")
    means = {name: float(np.mean([getattr(f, name) for f in valid]))
             for name in NUMERIC_FIELDS}
    out = []
    for f in features:
        if f.valid:
            out.append(replace(f, **{name: getattr(f, name) - means[name]
                                     for name in NUMERIC_FIELDS}))
        else:
            out.append(f)
    return out, means


def mirror_sequence(features: Sequence[RoiFeature],
                    geometry: SensorGeometry) -> list[RoiFeature]:
    """Horizontal flip of the feature sequence: center_x -> W-1-center_x."""
    return [replace(f, center_x=geometry.width - 1 - f.center_x) if f.valid else f
            for f in features]


def write_features(features: Sequence[RoiFeature], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["interval_start_us", "valid", "center_x", "center_y",
                         "size", "active_pct"])
        for f in features:
            writer.writerow([f.interval_start_us, int(f.valid),
                             f"{f.center_x:.6f}", f"{f.center_y:.6f}",
                             f"{f.size:.6f}", f"{f.active_pct:.6f}"])


def read_features(path) -> list[RoiFeature]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return [RoiFeature(int(r[0]), bool(int(r[1])), float(r[2]), float(r[3]),
                       float(r[4]), float(r[5]))
            for r in rows[1:]]
