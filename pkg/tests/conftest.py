import numpy as np
import pytest

from evstream.events import EventStream, SensorGeometry
from evstream.filters import FilterConfig, filter_stream
from evstream.synth import NoiseSpec, SceneScript, SignalSpec


def random_stream(n, geometry, seed=0, max_gap_us=200):
    rng = np.random.default_rng(seed)
    ts = np.cumsum(rng.integers(0, max_gap_us, n)) + 1
    return EventStream(geometry,
                       rng.integers(0, geometry.width, n),
                       rng.integers(0, geometry.height, n),
                       ts, rng.integers(0, 2, n))


def blob_noise_script(seed=42):
    """1 s moving square plus background noise, 3 hot pixels and a start-of-
    recording burst; the standard scene for signal/noise scoring tests."""
    g = SensorGeometry(240, 180)
    return SceneScript(
        geometry=g, duration_us=1_000_000,
        signal=SignalSpec(waypoints=((0, 40.0, 90.0), (1_000_000, 200.0, 90.0)),
                          shape_size=20, amplitude=0.6),
        noise=NoiseSpec(ba_rate_hz_per_pixel=0.1,
                        hot_pixels=((20, 20, 1000.0), (200, 60, 1000.0),
                                    (120, 160, 1000.0)),
                        initial_burst_count=500, rng_seed=seed))


def six_pause_script():
    """Move/pause alternation, 100 ms per segment, six pauses, zero noise."""
    wp = []
    x, t = 30.0, 0
    for seg in range(13):
        x2 = (130.0 if x == 30.0 else 30.0) if seg % 2 == 0 else x
        wp.append((t, x, 90.0))
        t += 100_000
        x = x2
    wp.append((t, x, 90.0))
    return SceneScript(geometry=SensorGeometry(240, 180), duration_us=1_300_000,
                       signal=SignalSpec(waypoints=tuple(wp), shape_size=20,
                                         amplitude=0.25),
                       noise=NoiseSpec(ba_rate_hz_per_pixel=0.0, rng_seed=1))


def sweep_script(seed=2, duration_us=900_000):
    """Noise-free square sweeping left to right through the sensor interior."""
    return SceneScript(geometry=SensorGeometry(240, 180), duration_us=duration_us,
                       signal=SignalSpec(waypoints=((0, 50.0, 90.0),
                                                    (duration_us, 190.0, 90.0)),
                                         shape_size=20, amplitude=0.6),
                       noise=NoiseSpec(ba_rate_hz_per_pixel=0.0, rng_seed=seed))


@pytest.fixture(scope="session")
def warm_kernel():
    """Compile the jitted pipeline once so timed tests measure steady state."""
    stream = random_stream(100, SensorGeometry(16, 16))
    filter_stream(stream, FilterConfig())
    filter_stream(stream, FilterConfig(order=("polarity",)))
    return True
