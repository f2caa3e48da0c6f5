"""Brute-force reference pipeline used as the oracle for the optimized kernel.

Deliberately unoptimized and structurally different from the production
implementation: group indices are recomputed by integer division, per-group
history is kept as explicit event lists, and every enabled predicate is
evaluated from that history. Keep this file independent of evstream.filters
internals."""

FIRST_EVENT = "first_event"
BACKGROUND_ACTIVITY = "background_activity"
HOT_PIXEL = "hot_pixel"
REFRACTORY = "refractory"
POLARITY = "polarity"


def reference_pipeline(events, s, order, dt_ba=1500, dt_refr=10, dt_pol=5000,
                       strict_hotpixel=False, grid_w=None, grid_h=None):
    """Replay events (iterable of (x, y, ts, pol)) and return one catching
    filter name (or None) per event."""
    history = {}  # (gx, gy) -> list of (x, y, ts, pol)
    results = []
    for x, y, ts, pol in events:
        gx = x // s
        gy = y // s
        group = history.setdefault((gx, gy), [])
        caught = None
        for name in order:
            if name == FIRST_EVENT:
                if not group:
                    caught = name
            elif name == BACKGROUND_ACTIVITY:
                last_ts = group[-1][2] if group else 0
                if ts - last_ts >= dt_ba:
                    caught = name
            elif name == HOT_PIXEL:
                if group:
                    lx, ly = group[-1][0], group[-1][1]
                    if strict_hotpixel:
                        if not (lx != x and ly != y):
                            caught = name
                    else:
                        if lx == x and ly == y:
                            caught = name
            elif name == REFRACTORY:
                if group and ts - group[-1][2] <= dt_refr:
                    caught = name
            elif name == POLARITY:
                supported = False
                for nx in (gx - 1, gx, gx + 1):
                    for ny in (gy - 1, gy, gy + 1):
                        if grid_w is not None and not (0 <= nx < grid_w and 0 <= ny < grid_h):
                            continue
                        neigh = history.get((nx, ny), ())
                        # newest opposite-polarity entry in this group
                        for ex, ey, ets, epol in reversed(neigh):
                            if epol == 1 - pol:
                                if ts - ets <= dt_pol:
                                    supported = True
                                break
                if not supported:
                    caught = name
            else:
                raise ValueError(f"unknown filter {name}")
            if caught is not None:
                break
        results.append(caught)
        group.append((x, y, ts, pol))
    return results
