"""Synthetic ground-truth event streams.

A simulated contrast-threshold pixel model renders a moving square of raised
log-intensity along a piecewise-linear waypoint trajectory; parameterized
noise processes (background activity, hot pixels, start-of-recording burst,
same-polarity shadow) are superimposed. Every event carries a label so filter
decisions can be scored as a signal/noise classification problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from evstream.errors import AlignmentError, ScriptError
from evstream.events import Event, EventStream, SensorGeometry
from evstream.filters import VerdictLog

SIGNAL = 0
NOISE_BA = 1
NOISE_HOT = 2
NOISE_BURST = 3
NOISE_SHADOW = 4

LABEL_NAMES = ("SIGNAL", "NOISE_BA", "NOISE_HOT", "NOISE_BURST", "NOISE_SHADOW")
NOISE_LABELS = (NOISE_BA, NOISE_HOT, NOISE_BURST, NOISE_SHADOW)


@dataclass(frozen=True)
class ContrastModel:
    """Per-pixel event generation thresholds on log intensity."""

    theta_on: float = 0.2
    theta_off: float = 0.2
    refractory_us: int = 0

    def __post_init__(self):
        if self.theta_on <= 0 or self.theta_off <= 0:
            raise ScriptError("contrast thresholds must be positive")


@dataclass(frozen=True)
class SignalSpec:
    """A bright square of side shape_size whose centre follows the waypoint
    list (t_us, cx, cy), linearly interpolated. Repeated positions model
    motion pauses."""

    waypoints: tuple[tuple[int, float, float], ...]
    shape_size: int = 20
    amplitude: float = 0.6   # log-intensity step inside the square


@dataclass(frozen=True)
class ShadowSpec:
    """Same-polarity noise in a rectangle trailing the signal square."""

    offset_x: int = -20
    offset_y: int = 0
    width: int = 10
    height: int = 20
    rate_hz: float = 500.0
    pol: int = 0


@dataclass(frozen=True)
class NoiseSpec:
    ba_rate_hz_per_pixel: float = 0.1
    hot_pixels: tuple[tuple[int, int, float], ...] = ()
    initial_burst_count: int = 0
    burst_window_us: int = 1000
    shadow: Optional[ShadowSpec] = None
    rng_seed: int = 0


@dataclass(frozen=True)
class SceneScript:
    geometry: SensorGeometry
    duration_us: int
    signal: Optional[SignalSpec] = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    contrast: ContrastModel = field(default_factory=ContrastModel)
    sim_step_us: int = 1000


@dataclass(frozen=True)
class LabeledEvent:
    event: Event
    label: str


class LabeledStream:
    """An EventStream plus a per-event ground-truth label array."""

    def __init__(self, stream: EventStream, labels: np.ndarray):
        if len(stream) != len(labels):
            raise AlignmentError("labels must align with events")
        self.stream = stream
        self.labels = labels

    def __len__(self) -> int:
        return len(self.stream)

    def __iter__(self) -> Iterator[LabeledEvent]:
        for i, e in enumerate(self.stream):
            yield LabeledEvent(e, LABEL_NAMES[self.labels[i]])

    def label_counts(self) -> dict[str, int]:
        return {name: int(np.count_nonzero(self.labels == code))
                for code, name in enumerate(LABEL_NAMES)}


def _interp_position(waypoints, t):
    times = np.array([w[0] for w in waypoints], dtype=np.float64)
    xs = np.array([w[1] for w in waypoints], dtype=np.float64)
    ys = np.array([w[2] for w in waypoints], dtype=np.float64)
    return np.interp(t, times, xs), np.interp(t, times, ys)


def _square_mask(geometry, cx, cy, size):
    half = size / 2.0
    x0 = int(np.ceil(cx - half))
    y0 = int(np.ceil(cy - half))
    mask = np.zeros((geometry.height, geometry.width), dtype=bool)
    mask[max(0, y0):min(geometry.height, y0 + size),
         max(0, x0):min(geometry.width, x0 + size)] = True
    return mask


def _render_signal(script: SceneScript) -> tuple[np.ndarray, ...]:
    sig = script.signal
    g = script.geometry
    cm = script.contrast
    half = sig.shape_size / 2.0
    for t, cx, cy in sig.waypoints:
        if cx - half < 0 or cx + half > g.width or cy - half < 0 or cy + half > g.height:
            raise ScriptError(f"trajectory leaves the sensor at t={t} ({cx},{cy})")

    mem = np.zeros((g.height, g.width), dtype=np.float64)
    last_fire = np.full((g.height, g.width), -np.inf)
    # start from the memorized t=0 level so the square does not "appear" as a
    # burst at the first step
    cx0, cy0 = _interp_position(sig.waypoints, 0.0)
    mem[_square_mask(g, cx0, cy0, sig.shape_size)] = sig.amplitude

    xs_out, ys_out, ts_out, pol_out = [], [], [], []
    step = script.sim_step_us
    for t in range(0, script.duration_us, step):
        cx, cy = _interp_position(sig.waypoints, float(t))
        level = np.where(_square_mask(g, cx, cy, sig.shape_size), sig.amplitude, 0.0)
        diff = level - mem
        if cm.refractory_us > 0:
            ready = (t - last_fire) >= cm.refractory_us
        else:
            ready = True
        k_on = np.where(ready, np.floor(np.maximum(diff, 0.0) / cm.theta_on), 0).astype(np.int64)
        k_off = np.where(ready, np.floor(np.maximum(-diff, 0.0) / cm.theta_off), 0).astype(np.int64)
        k_total = int(k_on.sum() + k_off.sum())
        if k_total == 0:
            continue
        # Emit multiplicity passes: one event per pixel per pass, pixels in
        # (y, x) order, evenly spaced timestamps across the step so dense
        # batches do not collapse onto one microsecond.
        spacing = step / k_total
        offset = 0
        max_k = int(max(k_on.max(), k_off.max()))
        for _pass in range(max_k):
            for kmap, pol in ((k_on, 1), (k_off, 0)):
                ys_f, xs_f = np.nonzero(kmap > _pass)
                for yy, xx in zip(ys_f, xs_f):
                    xs_out.append(xx)
                    ys_out.append(yy)
                    ts_out.append(t + int(offset * spacing))
                    pol_out.append(pol)
                    offset += 1
        fired = (k_on > 0) | (k_off > 0)
        mem += k_on * cm.theta_on - k_off * cm.theta_off
        last_fire[fired] = t
    return (np.array(xs_out, dtype=np.int64), np.array(ys_out, dtype=np.int64),
            np.array(ts_out, dtype=np.int64), np.array(pol_out, dtype=np.int64))


def render_scene(script: SceneScript) -> LabeledStream:
    """Render the scripted scene into a labeled, timestamp-ordered stream.

    Deterministic for a fixed script (the RNG seed lives in NoiseSpec)."""
    g = script.geometry
    noise = script.noise
    rng = np.random.default_rng(noise.rng_seed)
    dur_s = script.duration_us / 1e6

    parts = []  # (x, y, ts, pol, label)

    if script.signal is not None:
        x, y, ts, pol = _render_signal(script)
        parts.append((x, y, ts, pol, np.full(len(x), SIGNAL, dtype=np.int8)))

    if noise.ba_rate_hz_per_pixel > 0:
        count = rng.poisson(noise.ba_rate_hz_per_pixel * g.width * g.height * dur_s)
        ts = np.sort(rng.integers(0, script.duration_us, size=count))
        x = rng.integers(0, g.width, size=count)
        y = rng.integers(0, g.height, size=count)
        pol = rng.integers(0, 2, size=count)
        parts.append((x, y, ts, pol, np.full(count, NOISE_BA, dtype=np.int8)))

    for hx, hy, rate in noise.hot_pixels:
        if not g.contains(hx, hy):
            raise ScriptError(f"hot pixel ({hx},{hy}) outside the sensor")
        count = rng.poisson(rate * dur_s)
        ts = np.sort(rng.integers(0, script.duration_us, size=count))
        parts.append((np.full(count, hx), np.full(count, hy), ts,
                      rng.integers(0, 2, size=count),
                      np.full(count, NOISE_HOT, dtype=np.int8)))

    if noise.initial_burst_count > 0:
        count = noise.initial_burst_count
        ts = np.sort(rng.integers(0, noise.burst_window_us, size=count))
        parts.append((rng.integers(0, g.width, size=count),
                      rng.integers(0, g.height, size=count), ts,
                      rng.integers(0, 2, size=count),
                      np.full(count, NOISE_BURST, dtype=np.int8)))

    if noise.shadow is not None and script.signal is not None:
        sh = noise.shadow
        count = rng.poisson(sh.rate_hz * dur_s)
        ts = np.sort(rng.integers(0, script.duration_us, size=count))
        cx, cy = _interp_position(script.signal.waypoints, ts.astype(np.float64))
        x = (cx + sh.offset_x + rng.integers(0, sh.width, size=count)).astype(np.int64)
        y = (cy + sh.offset_y + rng.integers(0, sh.height, size=count)).astype(np.int64)
        keep = (x >= 0) & (x < g.width) & (y >= 0) & (y < g.height)
        parts.append((x[keep], y[keep], ts[keep],
                      np.full(int(keep.sum()), sh.pol),
                      np.full(int(keep.sum()), NOISE_SHADOW, dtype=np.int8)))

    if not parts:
        stream = EventStream.empty(g, source="synth", duration_us=script.duration_us)
        return LabeledStream(stream, np.zeros(0, dtype=np.int8))

    x = np.concatenate([p[0] for p in parts]).astype(np.int64)
    y = np.concatenate([p[1] for p in parts]).astype(np.int64)
    ts = np.concatenate([p[2] for p in parts]).astype(np.int64)
    pol = np.concatenate([p[3] for p in parts]).astype(np.int64)
    labels = np.concatenate([p[4] for p in parts])

    # ts primary, ties broken by (label, x, y) for determinism
    order = np.lexsort((y, x, labels, ts))
    stream = EventStream(g, x[order], y[order], ts[order], pol[order],
                         source="synth", duration_us=script.duration_us)
    return LabeledStream(stream, labels[order])


@dataclass
class ConfusionCounts:
    """Signal/noise confusion of a filter run against ground-truth labels.

    Positives are signal events: TP = signal passed, FP = noise passed,
    FN = signal caught, TN = noise caught."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1_defined(self) -> bool:
        return (self.precision + self.recall) > 0

    @property
    def f1(self) -> float:
        if not self.f1_defined:
            return 0.0
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r)


def score_filter(labeled: LabeledStream, verdicts: VerdictLog) -> ConfusionCounts:
    """Tally filter decisions against the ground-truth labels."""
    if len(labeled) != len(verdicts):
        raise AlignmentError(
            f"{len(labeled)} labels vs {len(verdicts)} verdicts")
    passed = verdicts.passed
    signal = labeled.labels == SIGNAL
    return ConfusionCounts(
        tp=int(np.count_nonzero(signal & passed)),
        fp=int(np.count_nonzero(~signal & passed)),
        fn=int(np.count_nonzero(signal & ~passed)),
        tn=int(np.count_nonzero(~signal & ~passed)),
    )


# --- scene script files ---------------------------------------------------

def scene_to_dict(script: SceneScript) -> dict:
    data = {
        "geometry": {"width": script.geometry.width, "height": script.geometry.height},
        "duration_us": script.duration_us,
        "sim_step_us": script.sim_step_us,
        "contrast": {"theta_on": script.contrast.theta_on,
                     "theta_off": script.contrast.theta_off,
                     "refractory_us": script.contrast.refractory_us},
        "noise": {
            "ba_rate_hz_per_pixel": script.noise.ba_rate_hz_per_pixel,
            "hot_pixels": [list(h) for h in script.noise.hot_pixels],
            "initial_burst_count": script.noise.initial_burst_count,
            "burst_window_us": script.noise.burst_window_us,
            "rng_seed": script.noise.rng_seed,
        },
    }
    if script.noise.shadow is not None:
        sh = script.noise.shadow
        data["noise"]["shadow"] = {"offset_x": sh.offset_x, "offset_y": sh.offset_y,
                                   "width": sh.width, "height": sh.height,
                                   "rate_hz": sh.rate_hz, "pol": sh.pol}
    if script.signal is not None:
        data["signal"] = {"shape_size": script.signal.shape_size,
                          "amplitude": script.signal.amplitude,
                          "waypoints": [list(w) for w in script.signal.waypoints]}
    return data


def scene_from_dict(data: dict) -> SceneScript:
    try:
        geom = SensorGeometry(**data.get("geometry", {}))
        signal = None
        if "signal" in data:
            sd = dict(data["signal"])
            sd["waypoints"] = tuple(tuple(w) for w in sd["waypoints"])
            signal = SignalSpec(**sd)
        nd = dict(data.get("noise", {}))
        if "shadow" in nd and nd["shadow"] is not None:
            nd["shadow"] = ShadowSpec(**nd["shadow"])
        if "hot_pixels" in nd:
            nd["hot_pixels"] = tuple(tuple(h) for h in nd["hot_pixels"])
        noise = NoiseSpec(**nd)
        contrast = ContrastModel(**data.get("contrast", {}))
        return SceneScript(geometry=geom, duration_us=int(data["duration_us"]),
                           signal=signal, noise=noise, contrast=contrast,
                           sim_step_us=int(data.get("sim_step_us", 1000)))
    except (KeyError, TypeError) as exc:
        raise ScriptError(f"bad scene script: {exc}") from exc


def load_scene_script(path) -> SceneScript:
    import yaml
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ScriptError(f"scene script {path} must hold a key-value mapping")
    return scene_from_dict(data)


def save_scene_script(script: SceneScript, path) -> None:
    import yaml
    with open(path, "w") as fh:
        yaml.safe_dump(scene_to_dict(script), fh, sort_keys=False)
