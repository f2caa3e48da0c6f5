"""Filter-performance measures over event packets.

The headline measure is the percentage of filtered (caught) events out of
events received, reported either cumulatively (running totals at each packet)
or instantaneously (per-packet counts).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from evstream.errors import AlignmentError
from evstream.events import EventPacket
from evstream.filters import FILTER_CODES, VerdictLog


def pct_filtered(received: int, caught: int) -> float:
    """100 * caught / received; an empty window counts as fully filtered."""
    if caught > received:
        raise AlignmentError(f"caught {caught} exceeds received {received}")
    if received == 0:
        return 100.0
    return 100.0 * caught / received


@dataclass
class PacketMetrics:
    window_start_us: int
    received: int
    caught: int
    caught_by_filter: dict[str, int] = field(default_factory=dict)

    @property
    def pct(self) -> float:
        return pct_filtered(self.received, self.caught)


@dataclass
class MetricSeries:
    packets: list[PacketMetrics]
    mode: str  # "cumulative" | "instantaneous"

    def pct_values(self) -> np.ndarray:
        return np.array([p.pct for p in self.packets])

    @property
    def final_pct(self) -> float:
        return self.packets[-1].pct if self.packets else 100.0


def build_series(verdicts: VerdictLog, packets: Sequence[EventPacket],
                 mode: str = "instantaneous") -> MetricSeries:
    """Fold the verdict log over the packet partition of the same stream."""
    if mode not in ("cumulative", "instantaneous"):
        raise ValueError(f"unknown mode {mode!r}")
    total = sum(len(p) for p in packets)
    if total != len(verdicts):
        raise AlignmentError(
            f"packets cover {total} events but the verdict log has {len(verdicts)}")
    out = []
    cum_recv = 0
    cum_caught = 0
    cum_by = {name: 0 for name in verdicts.order}
    for p in packets:
        sl = verdicts.caught[p.start_index:p.start_index + len(p)]
        recv = len(p)
        caught = int(np.count_nonzero(sl >= 0))
        by = {name: int(np.count_nonzero(sl == FILTER_CODES[name]))
              for name in verdicts.order}
        cum_recv += recv
        cum_caught += caught
        for name in by:
            cum_by[name] += by[name]
        if mode == "cumulative":
            out.append(PacketMetrics(p.window_start_us, cum_recv, cum_caught, dict(cum_by)))
        else:
            out.append(PacketMetrics(p.window_start_us, recv, caught, by))
    return MetricSeries(out, mode)


def series_to_csv(series: MetricSeries, path) -> None:
    names = list(series.packets[0].caught_by_filter) if series.packets else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_start_us", "received", "caught", "pct"] + names)
        for p in series.packets:
            writer.writerow([p.window_start_us, p.received, p.caught,
                             f"{p.pct:.6f}"] + [p.caught_by_filter.get(n, 0) for n in names])


def series_from_csv(path) -> MetricSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    names = header[4:]
    packets = [PacketMetrics(int(r[0]), int(r[1]), int(r[2]),
                             {n: int(v) for n, v in zip(names, r[4:])})
               for r in body]
    # mode is not stored; per-row counts are interpreted as written
    return MetricSeries(packets, "instantaneous")


def summary_table(rows: Sequence[tuple[str, int, int]]) -> str:
    """Plain-text summary: one line per (label, received, caught), percentage
    formatted to two decimals."""
    width = max([len(r[0]) for r in rows] + [6])
    lines = [f"{'label'.ljust(width)}  {'received':>10}  {'caught':>10}  {'% filtered':>10}"]
    for label, received, caught in rows:
        lines.append(f"{label.ljust(width)}  {received:>10}  {caught:>10}  "
                     f"{pct_filtered(received, caught):>10.2f}")
    return "\n".join(lines)


def plot_series_svg(series_by_label: dict[str, MetricSeries], path,
                    title: str = "% filtered events") -> None:
    """Line chart of percentage-filtered over packet time, written as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    for label, series in series_by_label.items():
        t = [p.window_start_us / 1e6 for p in series.packets]
        ax.plot(t, series.pct_values(), label=label, linewidth=1)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("% filtered")
    ax.set_ylim(-2, 102)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
