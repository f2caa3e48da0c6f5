"""Subsampled-map event filters and their sequential pipeline.

The sensor is grouped into s x s pixel blocks (s a power of two) backed by a
single timestamp cell each. Group indices come from an unsigned right shift of
the pixel coordinates. Five filters share this state:

* first_event        - rejects events whose group has never fired (map cell 0)
* background_activity- rejects events whose group support is older than dt_ba
* hot_pixel          - rejects events self-correlated with the group's last
                       event coordinates
* refractory         - rejects events arriving within dt_refr of the group's
                       last event
* polarity           - rejects events with no opposite-polarity support in the
                       3x3 group neighbourhood within dt_pol (off by default)

Whether an event passes or is caught, its timestamp and coordinates are
written to the maps afterwards, so caught events still provide support.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from evstream.errors import ConfigError, GeometryError
from evstream.events import Event, EventStream, SensorGeometry

FIRST_EVENT = "first_event"
BACKGROUND_ACTIVITY = "background_activity"
HOT_PIXEL = "hot_pixel"
REFRACTORY = "refractory"
POLARITY = "polarity"

FILTER_CODES = {
    FIRST_EVENT: 0,
    BACKGROUND_ACTIVITY: 1,
    HOT_PIXEL: 2,
    REFRACTORY: 3,
    POLARITY: 4,
}
FILTER_NAMES = {v: k for k, v in FILTER_CODES.items()}

DEFAULT_ORDER = (FIRST_EVENT, REFRACTORY, HOT_PIXEL, BACKGROUND_ACTIVITY)


@dataclass(frozen=True)
class FilterConfig:
    """Pipeline parameters. Defaults: s=4, dt_ba=1.5 ms, dt_refr=10 us."""

    s: int = 4
    dt_ba_us: int = 1500
    dt_refr_us: int = 10
    dt_pol_us: int = 5000
    order: tuple[str, ...] = DEFAULT_ORDER
    strict_hotpixel: bool = False

    def __post_init__(self):
        if self.s < 2 or (self.s & (self.s - 1)) != 0:
            raise ConfigError(f"subsampling rate s must be a power of two >= 2, got {self.s}")
        if not (self.dt_refr_us < self.dt_ba_us < self.dt_pol_us):
            raise ConfigError(
                f"support times must satisfy dt_refr < dt_ba < dt_pol, got "
                f"{self.dt_refr_us}, {self.dt_ba_us}, {self.dt_pol_us}")
        for name in self.order:
            if name not in FILTER_CODES:
                raise ConfigError(f"unknown filter {name!r}")
        if len(set(self.order)) != len(self.order):
            raise ConfigError("filter order contains duplicates")

    @property
    def n(self) -> int:
        """Shift amount, s = 2**n."""
        return self.s.bit_length() - 1

    @property
    def polarity_enabled(self) -> bool:
        return POLARITY in self.order


def subsample_coords(x: int, y: int, n: int) -> tuple[int, int]:
    """Map pixel coordinates to group coordinates by unsigned right shift;
    identical to integer division by 2**n."""
    return x >> n, y >> n


@dataclass
class FilterVerdict:
    passed: bool
    caught_by: Optional[str] = None

    def __post_init__(self):
        assert (self.caught_by is None) == self.passed


class FilterState:
    """Mutable filter memory for one stream.

    S holds the most recent event timestamp per group (0 = no event yet).
    cx/cy hold that event's full-resolution coordinates; the sentinel (W, H)
    is outside the sensor so it never aliases a real pixel. s_pol holds
    per-polarity timestamp maps, allocated only when the polarity filter is
    enabled.
    """

    def __init__(self, geometry: SensorGeometry, cfg: FilterConfig):
        self.geometry = geometry
        self.cfg = cfg
        n = cfg.n
        gw = -(-geometry.width // cfg.s)   # ceiling division
        gh = -(-geometry.height // cfg.s)
        self.grid_width = gw
        self.grid_height = gh
        self.S = np.zeros((gh, gw), dtype=np.int64)
        self.cx = np.full((gh, gw), geometry.width, dtype=np.int64)
        self.cy = np.full((gh, gw), geometry.height, dtype=np.int64)
        if cfg.polarity_enabled:
            self.s_pol = np.zeros((2, gh, gw), dtype=np.int64)
        else:
            self.s_pol = None
        self._n = n

    def group_of(self, e: Event) -> tuple[int, int]:
        return subsample_coords(e.x, e.y, self._n)


def first_event_filter(e: Event, state: FilterState) -> FilterVerdict:
    """Pass only if the event's group has already stored a timestamp."""
    X, Y = state.group_of(e)
    if state.S[Y, X] > 0:
        return FilterVerdict(True)
    return FilterVerdict(False, FIRST_EVENT)


def background_activity_filter(e: Event, state: FilterState, dt_ba: int) -> FilterVerdict:
    """Pass only if the group support is younger than dt_ba (catch on >=)."""
    X, Y = state.group_of(e)
    if e.ts - state.S[Y, X] >= dt_ba:
        return FilterVerdict(False, BACKGROUND_ACTIVITY)
    return FilterVerdict(True)


def hot_pixel_filter(e: Event, state: FilterState, strict: bool = False) -> FilterVerdict:
    """Reject self-correlation with the group's previous event.

    Default mode catches only an exact coordinate repeat; strict mode applies
    the literal conjunction (both stored coordinates must differ to pass).
    """
    X, Y = state.group_of(e)
    cx, cy = state.cx[Y, X], state.cy[Y, X]
    if strict:
        passed = cx != e.x and cy != e.y
    else:
        passed = not (cx == e.x and cy == e.y)
    return FilterVerdict(True) if passed else FilterVerdict(False, HOT_PIXEL)


def refractory_filter(e: Event, state: FilterState, dt_refr: int) -> FilterVerdict:
    """Reject events within dt_refr of the group's last event (catch on <=);
    an empty group always passes."""
    X, Y = state.group_of(e)
    s = state.S[Y, X]
    if s > 0 and e.ts - s <= dt_refr:
        return FilterVerdict(False, REFRACTORY)
    return FilterVerdict(True)


def polarity_filter(e: Event, state: FilterState, dt_pol: int) -> FilterVerdict:
    """Pass if any group in the 3x3 neighbourhood holds opposite-polarity
    support younger than dt_pol. Neighbourhood is clipped at map borders."""
    if state.s_pol is None:
        raise ConfigError("polarity filter requires polarity-split maps")
    X, Y = state.group_of(e)
    opp = 1 - e.pol
    for gy in range(max(0, Y - 1), min(state.grid_height, Y + 2)):
        for gx in range(max(0, X - 1), min(state.grid_width, X + 2)):
            sv = state.s_pol[opp, gy, gx]
            if sv > 0 and e.ts - sv <= dt_pol:
                return FilterVerdict(True)
    return FilterVerdict(False, POLARITY)


def apply_pipeline(e: Event, state: FilterState, cfg: FilterConfig) -> FilterVerdict:
    """Run the enabled filters in order, short-circuiting on the first catch,
    then write the event into the maps regardless of the verdict."""
    if not state.geometry.contains(e.x, e.y):
        raise GeometryError(f"event at ({e.x},{e.y}) outside "
                            f"{state.geometry.width}x{state.geometry.height}")
    if state.cfg.s != cfg.s or (cfg.polarity_enabled and state.s_pol is None):
        raise ConfigError("filter state does not match the supplied config")
    verdict = FilterVerdict(True)
    for name in cfg.order:
        if name == FIRST_EVENT:
            verdict = first_event_filter(e, state)
        elif name == BACKGROUND_ACTIVITY:
            verdict = background_activity_filter(e, state, cfg.dt_ba_us)
        elif name == HOT_PIXEL:
            verdict = hot_pixel_filter(e, state, cfg.strict_hotpixel)
        elif name == REFRACTORY:
            verdict = refractory_filter(e, state, cfg.dt_refr_us)
        elif name == POLARITY:
            verdict = polarity_filter(e, state, cfg.dt_pol_us)
        if not verdict.passed:
            break
    X, Y = state.group_of(e)
    state.S[Y, X] = e.ts
    state.cx[Y, X] = e.x
    state.cy[Y, X] = e.y
    if state.s_pol is not None:
        state.s_pol[e.pol, Y, X] = e.ts
    return verdict


@njit(cache=True)
def _pipeline_kernel(x, y, ts, pol, order, n, dt_ba, dt_refr, dt_pol,
                     strict_hot, S, cx, cy, s_pol, use_pol):
    m = x.shape[0]
    caught = np.full(m, -1, dtype=np.int8)
    gh, gw = S.shape
    for i in range(m):
        xi = x[i]
        yi = y[i]
        ti = ts[i]
        pi = pol[i]
        X = xi >> n
        Y = yi >> n
        verdict = -1
        for k in range(order.shape[0]):
            f = order[k]
            if f == 0:       # first event
                if S[Y, X] <= 0:
                    verdict = 0
            elif f == 1:     # background activity
                if ti - S[Y, X] >= dt_ba:
                    verdict = 1
            elif f == 2:     # hot pixel
                if strict_hot:
                    if not (cx[Y, X] != xi and cy[Y, X] != yi):
                        verdict = 2
                else:
                    if cx[Y, X] == xi and cy[Y, X] == yi:
                        verdict = 2
            elif f == 3:     # refractory
                sv = S[Y, X]
                if sv > 0 and ti - sv <= dt_refr:
                    verdict = 3
            else:            # polarity
                ok = False
                opp = 1 - pi
                y0 = Y - 1 if Y > 0 else 0
                y1 = Y + 2 if Y + 2 < gh else gh
                x0 = X - 1 if X > 0 else 0
                x1 = X + 2 if X + 2 < gw else gw
                for gy in range(y0, y1):
                    for gx in range(x0, x1):
                        sv = s_pol[opp, gy, gx]
                        if sv > 0 and ti - sv <= dt_pol:
                            ok = True
                if not ok:
                    verdict = 4
            if verdict >= 0:
                break
        caught[i] = verdict
        S[Y, X] = ti
        cx[Y, X] = xi
        cy[Y, X] = yi
        if use_pol:
            s_pol[pi, Y, X] = ti
    return caught


class VerdictLog:
    """Per-event filter outcomes: caught[i] is the catching filter's code, or
    -1 for a pass."""

    def __init__(self, caught: np.ndarray, order: tuple[str, ...]):
        self.caught = caught
        self.order = order

    def __len__(self) -> int:
        return len(self.caught)

    @property
    def passed(self) -> np.ndarray:
        return self.caught < 0

    def verdict(self, i: int) -> FilterVerdict:
        c = int(self.caught[i])
        return FilterVerdict(True) if c < 0 else FilterVerdict(False, FILTER_NAMES[c])

    def counts(self) -> dict[str, int]:
        """Caught-event count per enabled filter."""
        return {name: int(np.count_nonzero(self.caught == FILTER_CODES[name]))
                for name in self.order}

    @property
    def total_caught(self) -> int:
        return int(np.count_nonzero(self.caught >= 0))


def filter_stream(stream: EventStream, cfg: FilterConfig,
                  state: Optional[FilterState] = None
                  ) -> tuple[EventStream, VerdictLog]:
    """Run the whole stream through the pipeline from (by default) fresh state.

    Timestamps are shifted internally so the stream starts at ts=1, keeping a
    genuine first event distinguishable from the zero-initialized map; output
    events keep their original timestamps.
    """
    if state is None:
        state = FilterState(stream.geometry, cfg)
    ts = stream.ts
    if len(ts) and ts[0] < 1:
        ts = ts + (1 - int(ts[0]))
    order = np.array([FILTER_CODES[name] for name in cfg.order], dtype=np.int64)
    caught = _pipeline_kernel(
        stream.x, stream.y, ts, stream.pol, order, cfg.n,
        cfg.dt_ba_us, cfg.dt_refr_us, cfg.dt_pol_us, cfg.strict_hotpixel,
        state.S, state.cx, state.cy,
        state.s_pol if state.s_pol is not None else np.zeros((2, 1, 1), np.int64),
        state.s_pol is not None)
    log = VerdictLog(caught, cfg.order)
    return stream.select(log.passed), log


# --- config file round trip (flat key-value YAML) -------------------------

CONFIG_KEYS = ("s", "dt_ba_us", "dt_refr_us", "dt_pol_us", "order", "strict_hotpixel")


def config_to_dict(cfg: FilterConfig) -> dict:
    return {
        "s": cfg.s,
        "dt_ba_us": cfg.dt_ba_us,
        "dt_refr_us": cfg.dt_refr_us,
        "dt_pol_us": cfg.dt_pol_us,
        "order": list(cfg.order),
        "strict_hotpixel": cfg.strict_hotpixel,
    }


def config_from_dict(data: dict) -> FilterConfig:
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "order" in kwargs:
        kwargs["order"] = tuple(kwargs["order"])
    return FilterConfig(**kwargs)


def save_filter_config(cfg: FilterConfig, path) -> None:
    import yaml
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)


def load_filter_config(path) -> FilterConfig:
    import yaml
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a key-value mapping")
    return config_from_dict(data)
