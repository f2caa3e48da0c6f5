"""Core event data model: events, sensor geometry, streams and packets.

Streams are stored as parallel numpy arrays (x, y, ts, pol) so the filter and
encoder kernels can run vectorized / jitted; the scalar ``Event`` dataclass is
the unit exchanged at API boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from evstream.errors import GeometryError, StreamOrderError

# Backward timestamp jumps up to this size are treated as hardware jitter and
# clamped to the running maximum; anything larger is a hard ordering error.
MAX_BACKWARD_JITTER_US = 1000


@dataclass(frozen=True, slots=True)
class Event:
    """One sensor event: pixel coordinates, microsecond timestamp, polarity
    (1 = ON / brightness increase, 0 = OFF / decrease)."""

    x: int
    y: int
    ts: int
    pol: int


@dataclass(frozen=True)
class SensorGeometry:
    width: int = 240
    height: int = 180

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise GeometryError(f"sensor geometry must be positive, got {self.width}x{self.height}")

    def contains(self, x, y) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


# DAVIS 240C pixel array.
DAVIS240 = SensorGeometry(240, 180)


class EventStream:
    """An ordered event sequence over a fixed sensor geometry.

    Timestamps are widened to int64 at ingest. Backward jumps up to
    ``MAX_BACKWARD_JITTER_US`` are clamped to the running maximum; larger
    jumps raise :class:`StreamOrderError` with the offending index.
    """

    def __init__(self, geometry: SensorGeometry, x, y, ts, pol,
                 source: str = "", duration_us: Optional[int] = None,
                 validate: bool = True):
        self.geometry = geometry
        self.x = np.asarray(x, dtype=np.int64)
        self.y = np.asarray(y, dtype=np.int64)
        self.ts = np.asarray(ts, dtype=np.int64)
        self.pol = np.asarray(pol, dtype=np.int64)
        self.source = source
        self.duration_us = duration_us
        n = len(self.x)
        if not (len(self.y) == len(self.ts) == len(self.pol) == n):
            raise ValueError("x, y, ts, pol must have equal lengths")
        if validate:
            self._validate()

    def _validate(self):
        if len(self.x) == 0:
            return
        if (self.x < 0).any() or (self.x >= self.geometry.width).any() \
                or (self.y < 0).any() or (self.y >= self.geometry.height).any():
            bad = int(np.argmax((self.x < 0) | (self.x >= self.geometry.width)
                                | (self.y < 0) | (self.y >= self.geometry.height)))
            raise GeometryError(
                f"event {bad} at ({self.x[bad]},{self.y[bad]}) outside "
                f"{self.geometry.width}x{self.geometry.height}")
        if not np.isin(self.pol, (0, 1)).all():
            bad = int(np.argmax(~np.isin(self.pol, (0, 1))))
            raise ValueError(f"event {bad}: polarity must be 0 or 1, got {self.pol[bad]}")
        diffs = np.diff(self.ts)
        if (diffs < 0).any():
            if (diffs < -MAX_BACKWARD_JITTER_US).any():
                bad = int(np.argmax(diffs < -MAX_BACKWARD_JITTER_US)) + 1
                raise StreamOrderError(bad)
            # small backward jitter: clamp to the running maximum
            self.ts = np.maximum.accumulate(self.ts)

    @classmethod
    def from_events(cls, events: Sequence[Event], geometry: SensorGeometry,
                    **kwargs) -> "EventStream":
        return cls(geometry,
                   [e.x for e in events], [e.y for e in events],
                   [e.ts for e in events], [e.pol for e in events], **kwargs)

    @classmethod
    def empty(cls, geometry: SensorGeometry, **kwargs) -> "EventStream":
        return cls(geometry, [], [], [], [], **kwargs)

    def __len__(self) -> int:
        return len(self.x)

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self.x)):
            yield Event(int(self.x[i]), int(self.y[i]), int(self.ts[i]), int(self.pol[i]))

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), int(self.ts[i]), int(self.pol[i]))

    def select(self, mask) -> "EventStream":
        """New stream keeping only events where mask is True (order preserved)."""
        return EventStream(self.geometry, self.x[mask], self.y[mask],
                           self.ts[mask], self.pol[mask],
                           source=self.source, duration_us=self.duration_us,
                           validate=False)

    @property
    def t_start(self) -> int:
        """Nominal stream start: 0 for streams with a declared duration,
        otherwise the first event timestamp."""
        if self.duration_us is not None:
            return 0
        return int(self.ts[0]) if len(self) else 0

    @property
    def t_end(self) -> int:
        """Exclusive nominal stream end."""
        if self.duration_us is not None:
            return self.t_start + self.duration_us
        return int(self.ts[-1]) + 1 if len(self) else 0


@dataclass
class EventPacket:
    """Events grouped into one fixed time window [window_start, window_end)."""

    window_start_us: int
    window_end_us: int
    x: np.ndarray
    y: np.ndarray
    ts: np.ndarray
    pol: np.ndarray
    start_index: int = 0   # offset of this packet's first event in the stream

    def __len__(self) -> int:
        return len(self.x)


def packetize(stream: EventStream, window_us: int) -> list[EventPacket]:
    """Split a stream into fixed-duration packets.

    The concatenation of packet events reproduces the stream exactly; windows
    with no events yield empty packets so per-packet metrics can report fully
    idle periods.
    """
    if window_us <= 0:
        raise ValueError("window_us must be positive")
    if len(stream) == 0 and stream.duration_us is None:
        return []
    t0 = stream.t_start
    t_end = max(stream.t_end, int(stream.ts[-1]) + 1 if len(stream) else 0)
    n_windows = max(1, -(-(t_end - t0) // window_us))
    edges = t0 + window_us * np.arange(n_windows + 1)
    idx = np.searchsorted(stream.ts, edges, side="left")
    packets = []
    for k in range(n_windows):
        lo, hi = int(idx[k]), int(idx[k + 1])
        packets.append(EventPacket(int(edges[k]), int(edges[k + 1]),
                                   stream.x[lo:hi], stream.y[lo:hi],
                                   stream.ts[lo:hi], stream.pol[lo:hi],
                                   start_index=lo))
    return packets


def mirror_event(e: Event, g: SensorGeometry) -> Event:
    """Horizontal flip: (x, y, ts, pol) -> (W-1-x, y, ts, pol). Involution."""
    if not g.contains(e.x, e.y):
        raise GeometryError(f"event at ({e.x},{e.y}) outside {g.width}x{g.height}")
    return Event(g.width - 1 - e.x, e.y, e.ts, e.pol)


def mirror_stream(stream: EventStream) -> EventStream:
    """Horizontally flipped copy of the stream."""
    return EventStream(stream.geometry, stream.geometry.width - 1 - stream.x,
                       stream.y, stream.ts, stream.pol,
                       source=stream.source, duration_us=stream.duration_us,
                       validate=False)
