"""Event file formats: AEDAT 2.0 (DAVIS240) and plain CSV interchange.

AEDAT 2.0 layout: '#'-prefixed ASCII header lines, first line
``#!AER-DAT2.0``, followed by 8-byte big-endian records of 32-bit address
then 32-bit microsecond timestamp. DAVIS240 address decoding is captured in
``DAVIS240_LAYOUT`` below; records flagged as external/special are skipped.
"""

from __future__ import annotations

import csv as _csv
import io
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from evstream.errors import FormatError, TimestampRangeError
from evstream.events import DAVIS240, EventStream, SensorGeometry

AEDAT2_MAGIC = "#!AER-DAT2.0"
RECORD_SIZE = 8
CHUNK_RECORDS = 1 << 16

# DAVIS240 address word bit layout
DAVIS240_LAYOUT = {
    "pol_bit": 11,
    "x_shift": 12, "x_mask": 0x3FF,   # bits 12..21
    "y_shift": 22, "y_mask": 0x1FF,   # bits 22..30
    "special_bit": 10,                # external / special event marker
}

TS_WRAP = 1 << 32


def _open_source(source):
    if isinstance(source, (bytes, bytearray)):
        return io.BytesIO(source)
    return open(source, "rb")


def _is_header_line(raw: bytes) -> bool:
    # data records can also start with byte 0x23 ('#'); a real header line is
    # newline-terminated printable ASCII
    if not raw.endswith(b"\n"):
        return False
    return all(32 <= b <= 126 or b in (0x0D,) for b in raw[:-1])


def _read_header(fh) -> list[str]:
    lines = []
    while True:
        pos = fh.tell()
        first = fh.read(1)
        if first != b"#":
            fh.seek(pos)
            break
        raw = first + fh.readline()
        if lines and not _is_header_line(raw):
            fh.seek(pos)
            break
        lines.append(raw.decode("ascii", errors="replace").rstrip("\r\n"))
    if not lines or not lines[0].startswith(AEDAT2_MAGIC):
        raise FormatError(f"not an AEDAT 2.0 file (header {lines[:1]!r})")
    return lines


def iter_aedat2(source, lenient: bool = False) -> Iterator[tuple[np.ndarray, ...]]:
    """Stream DAVIS240 records in bounded chunks of (x, y, ts, pol) arrays.

    32-bit timestamps are widened to 64 bits and unwrapped when they fall
    back by more than half the 32-bit range."""
    lay = DAVIS240_LAYOUT
    fh = _open_source(source)
    try:
        _read_header(fh)
        wrap_offset = 0
        last_ts = None
        while True:
            offset = fh.tell()
            chunk = fh.read(RECORD_SIZE * CHUNK_RECORDS)
            if not chunk:
                break
            if len(chunk) % RECORD_SIZE:
                raise FormatError(
                    f"truncated record at byte offset {offset + len(chunk) // RECORD_SIZE * RECORD_SIZE}",
                    offset=offset + len(chunk) // RECORD_SIZE * RECORD_SIZE)
            words = np.frombuffer(chunk, dtype=">u4").astype(np.int64).reshape(-1, 2)
            addr, ts = words[:, 0], words[:, 1]
            keep = (addr >> lay["special_bit"]) & 1 == 0
            addr, ts = addr[keep], ts[keep]
            x = (addr >> lay["x_shift"]) & lay["x_mask"]
            y = (addr >> lay["y_shift"]) & lay["y_mask"]
            pol = (addr >> lay["pol_bit"]) & 1
            # unwrap 32-bit timestamp rollover
            ts = ts + wrap_offset
            if last_ts is not None and len(ts) and ts[0] - last_ts < -(TS_WRAP // 2):
                ts = ts + TS_WRAP
                wrap_offset += TS_WRAP
            drops = np.nonzero(np.diff(ts) < -(TS_WRAP // 2))[0]
            for d in drops:
                ts[d + 1:] += TS_WRAP
                wrap_offset += TS_WRAP
            if len(ts):
                last_ts = int(ts[-1])
            bad = (x >= DAVIS240.width) | (y >= DAVIS240.height)
            if bad.any():
                if not lenient:
                    i = int(np.argmax(bad))
                    raise FormatError(
                        f"record with coordinates ({x[i]},{y[i]}) outside 240x180 "
                        f"near byte offset {offset + int(i) * RECORD_SIZE}",
                        offset=offset + int(i) * RECORD_SIZE)
                good = ~bad
                x, y, ts, pol = x[good], y[good], ts[good], pol[good]
            yield x, y, ts, pol
    finally:
        fh.close()


def read_aedat2(source, lenient: bool = False) -> EventStream:
    """Parse an AEDAT 2.0 file (path or bytes) into an EventStream."""
    xs, ys, tss, pols = [], [], [], []
    for x, y, ts, pol in iter_aedat2(source, lenient=lenient):
        xs.append(x)
        ys.append(y)
        tss.append(ts)
        pols.append(pol)
    if not xs:
        return EventStream.empty(DAVIS240, source=str(source)[:80])
    return EventStream(DAVIS240, np.concatenate(xs), np.concatenate(ys),
                       np.concatenate(tss), np.concatenate(pols),
                       source=str(source)[:80])


def write_aedat2(stream: EventStream, path: Optional[str | Path] = None) -> bytes:
    """Encode a stream as AEDAT 2.0 bytes; also writes to ``path`` if given."""
    lay = DAVIS240_LAYOUT
    if len(stream) and (stream.ts >= TS_WRAP).any():
        bad = int(np.argmax(stream.ts >= TS_WRAP))
        raise TimestampRangeError(
            f"timestamp {int(stream.ts[bad])} at event {bad} exceeds 32 bits")
    if len(stream) and ((stream.x >= DAVIS240.width) | (stream.y >= DAVIS240.height)).any():
        raise FormatError("AEDAT 2.0 writer requires 240x180 coordinates")
    header = (AEDAT2_MAGIC + "\r\n# evstream AEDAT 2.0 writer\r\n").encode("ascii")
    addr = ((stream.y & lay["y_mask"]) << lay["y_shift"]) \
        | ((stream.x & lay["x_mask"]) << lay["x_shift"]) \
        | (stream.pol << lay["pol_bit"])
    words = np.empty((len(stream), 2), dtype=">u4")
    words[:, 0] = addr
    words[:, 1] = stream.ts
    data = header + words.tobytes()
    if path is not None:
        Path(path).write_bytes(data)
    return data


CSV_HEADER = ["ts_us", "x", "y", "pol"]


def write_csv(stream: EventStream, path, labels=None,
              label_names: Optional[tuple[str, ...]] = None) -> None:
    """Write 'ts_us,x,y,pol' rows (plus a label column when labels given)."""
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        if labels is not None:
            writer.writerow(CSV_HEADER + ["label"])
            for i in range(len(stream)):
                name = label_names[labels[i]] if label_names else labels[i]
                writer.writerow([stream.ts[i], stream.x[i], stream.y[i],
                                 stream.pol[i], name])
        else:
            writer.writerow(CSV_HEADER)
            for i in range(len(stream)):
                writer.writerow([stream.ts[i], stream.x[i], stream.y[i], stream.pol[i]])


def read_csv(path, geometry: Optional[SensorGeometry] = None
             ) -> tuple[EventStream, Optional[list[str]]]:
    """Parse the CSV interchange format; returns (stream, labels or None)."""
    geometry = geometry or DAVIS240
    xs, ys, tss, pols, labels = [], [], [], [], []
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path} is empty", line=1)
        if [h.strip() for h in header[:4]] != CSV_HEADER:
            raise FormatError(f"bad CSV header {header!r}", line=1)
        has_label = len(header) > 4
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ts, x, y, pol = int(row[0]), int(row[1]), int(row[2]), int(row[3])
            except (ValueError, IndexError) as exc:
                raise FormatError(f"malformed row at line {lineno}: {row!r}",
                                  line=lineno) from exc
            if pol not in (0, 1):
                raise FormatError(f"polarity must be 0 or 1 at line {lineno}, got {pol}",
                                  line=lineno)
            if not geometry.contains(x, y):
                raise FormatError(f"coordinates ({x},{y}) outside "
                                  f"{geometry.width}x{geometry.height} at line {lineno}",
                                  line=lineno)
            tss.append(ts)
            xs.append(x)
            ys.append(y)
            pols.append(pol)
            if has_label:
                labels.append(row[4] if len(row) > 4 else "")
    stream = EventStream(geometry, xs, ys, tss, pols, source=str(path)[:80])
    return stream, (labels if has_label else None)
