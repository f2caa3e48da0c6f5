import numpy as np
import pytest

from conftest import blob_noise_script, six_pause_script

from evstream.errors import AlignmentError
from evstream.events import SensorGeometry, packetize
from evstream.filters import FilterConfig, VerdictLog, filter_stream
from evstream.metrics import (build_series,
                              pct_filtered, plot_series_svg, series_from_csv,
                              series_to_csv, summary_table)
from evstream.synth import render_scene, NoiseSpec, SceneScript, SignalSpec


def test_pct_filtered_examples():
    # the order of magnitude reported for a full recording at s=4
    assert pct_filtered(661_874, 446_095) == pytest.approx(67.39, abs=0.02)
    assert pct_filtered(100, 0) == 0.0
    assert pct_filtered(0, 0) == 100.0


def test_pct_filtered_accounting_error():
    with pytest.raises(AlignmentError):
        pct_filtered(10, 11)


def synthetic_log_and_packets():
    lab = render_scene(blob_noise_script())
    _, log = filter_stream(lab.stream, FilterConfig())
    packets = packetize(lab.stream, 10_000)
    return lab, log, packets


def test_constant_rate_flat_series():
    # alternating catch/pass -> every packet at exactly 50%
    caught = np.tile(np.array([0, -1], dtype=np.int8), 50)
    log = VerdictLog(caught, ("first_event",))

    class P:
        def __init__(self, i):
            self.window_start_us = i * 1000
            self.start_index = i * 10
        def __len__(self):
            return 10

    packets = [P(i) for i in range(10)]
    for mode in ("instantaneous", "cumulative"):
        series = build_series(log, packets, mode)
        assert np.allclose(series.pct_values(), 50.0)


def test_final_cumulative_equals_whole_sequence_ratio():
    _, log, packets = synthetic_log_and_packets()
    series = build_series(log, packets, "cumulative")
    expected = pct_filtered(len(log), log.total_caught)
    assert series.final_pct == pytest.approx(expected, abs=1e-9)


def test_instantaneous_weighted_mean_matches_cumulative():
    _, log, packets = synthetic_log_and_packets()
    inst = build_series(log, packets, "instantaneous")
    weights = np.array([p.received for p in inst.packets], dtype=float)
    vals = inst.pct_values()
    nonzero = weights > 0
    weighted = (vals[nonzero] * weights[nonzero]).sum() / weights.sum()
    assert weighted == pytest.approx(pct_filtered(len(log), log.total_caught), abs=1e-9)


def test_per_filter_attribution_sums_to_caught():
    _, log, packets = synthetic_log_and_packets()
    for mode in ("instantaneous", "cumulative"):
        for p in build_series(log, packets, mode).packets:
            assert sum(p.caught_by_filter.values()) == p.caught


def test_alignment_mismatch_detected():
    _, log, packets = synthetic_log_and_packets()
    with pytest.raises(AlignmentError):
        build_series(log, packets[:-5], "instantaneous")


def test_idle_prefix_then_motion_drop():
    g = SensorGeometry(240, 180)
    onset = 200_000
    script = SceneScript(
        geometry=g, duration_us=1_000_000,
        signal=SignalSpec(waypoints=((0, 40.0, 90.0), (onset, 40.0, 90.0),
                                     (1_000_000, 200.0, 90.0)),
                          shape_size=20, amplitude=0.6),
        noise=NoiseSpec(ba_rate_hz_per_pixel=0.1,
                        hot_pixels=((10, 10, 1000.0),), rng_seed=3))
    lab = render_scene(script)
    _, log = filter_stream(lab.stream, FilterConfig())
    window = 10_000
    inst = build_series(log, packetize(lab.stream, window), "instantaneous")
    vals = inst.pct_values()
    onset_packet = onset // window
    # idle prefix is (nearly) fully filtered, the first clearly mixed packet
    # appears where the scripted motion starts, within one packet
    first_mixed = int(np.argmax(vals < 60.0))
    assert abs(first_mixed - onset_packet) <= 1
    assert vals[: onset_packet - 1].min() > 90.0


def test_six_pauses_six_instantaneous_spikes():
    lab = render_scene(six_pause_script())
    _, log = filter_stream(lab.stream, FilterConfig())
    inst = build_series(log, packetize(lab.stream, 10_000), "instantaneous")
    vals = inst.pct_values()
    runs = int(((vals == 100.0) & ~np.roll(vals == 100.0, 1))[1:].sum()
               + (vals[0] == 100.0))
    assert runs == 6


def test_series_csv_round_trip(tmp_path):
    _, log, packets = synthetic_log_and_packets()
    series = build_series(log, packets, "instantaneous")
    path = tmp_path / "metrics.csv"
    series_to_csv(series, path)
    loaded = series_from_csv(path)
    assert [p.received for p in loaded.packets] == [p.received for p in series.packets]
    assert [p.caught for p in loaded.packets] == [p.caught for p in series.packets]
    assert [p.caught_by_filter for p in loaded.packets] == \
        [p.caught_by_filter for p in series.packets]


def test_summary_table_formatting():
    table = summary_table([("hdd", 661_874, 446_095), ("idle", 0, 0)])
    assert "67.40" in table
    assert "100.00" in table


def test_plot_series_svg(tmp_path):
    _, log, packets = synthetic_log_and_packets()
    series = build_series(log, packets, "cumulative")
    path = tmp_path / "chart.svg"
    plot_series_svg({"run": series}, path)
    assert path.read_text().lstrip().startswith("<?xml")
