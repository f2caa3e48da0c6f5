"""Command-line entry point.

Subcommands: filter (denoise a stream), synth (render a scene script),
tbr (frame encoding), roi (feature extraction), report (summary + charts).
Every run writes a YAML manifest describing inputs, config and outputs.
Configuration precedence: CLI flag > config file > built-in default.
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click
import yaml

import evstream
from evstream import filters as flt
from evstream import formats, metrics, roi, synth, tbr
from evstream.errors import EvstreamError
from evstream.events import packetize


def _read_stream(path):
    path = Path(path)
    if path.suffix.lower() == ".aedat":
        return formats.read_aedat2(path), None
    return formats.read_csv(path)


def _write_manifest(path, command, inputs, config, outputs, summary):
    manifest = {
        "tool": "evstream",
        "version": evstream.__version__,
        "command": command,
        "inputs": [str(p) for p in inputs],
        "config": config,
        "outputs": [str(p) for p in outputs],
        "summary": summary,
    }
    with open(path, "w") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=False)


def _build_filter_config(config_path, s, dt_ba_us, dt_refr_us, dt_pol_us,
                         order, strict_hotpixel):
    from evstream.errors import ConfigError
    try:
        cfg = flt.load_filter_config(config_path) if config_path else flt.FilterConfig()
        overrides = {}
        if s is not None:
            overrides["s"] = s
        if dt_ba_us is not None:
            overrides["dt_ba_us"] = dt_ba_us
        if dt_refr_us is not None:
            overrides["dt_refr_us"] = dt_refr_us
        if dt_pol_us is not None:
            overrides["dt_pol_us"] = dt_pol_us
        if order:
            overrides["order"] = tuple(order.split(","))
        if strict_hotpixel is not None:
            overrides["strict_hotpixel"] = strict_hotpixel
        return replace(cfg, **overrides) if overrides else cfg
    except ConfigError as exc:
        # configuration mistakes are usage errors (exit code 2)
        raise click.UsageError(str(exc))


@click.group()
@click.version_option(evstream.__version__)
def main():
    """Event-camera stream toolkit: denoising filters, frame encoding,
    ROI features and filter metrics."""


filter_options = [
    click.option("--config", "config_path", type=click.Path(exists=True),
                 help="YAML filter config file."),
    click.option("--s", type=int, default=None, help="Subsampling rate (power of two)."),
    click.option("--dt-ba-us", type=int, default=None, help="Background-activity support time."),
    click.option("--dt-refr-us", type=int, default=None, help="Refractory support time."),
    click.option("--dt-pol-us", type=int, default=None, help="Polarity support time."),
    click.option("--order", type=str, default=None,
                 help="Comma-separated filter order, e.g. first_event,refractory."),
    click.option("--strict-hotpixel/--no-strict-hotpixel", default=None,
                 help="Literal conjunction hot-pixel semantics."),
]


def add_options(options):
    def wrap(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return wrap


@main.command("filter")
@click.argument("input_path", type=click.Path(exists=True))
@click.option("-o", "--output", required=True, type=click.Path(),
              help="Filtered stream CSV.")
@click.option("--verdicts", "verdicts_path", type=click.Path(),
              help="Per-event verdict log CSV.")
@click.option("--metrics", "metrics_path", type=click.Path(),
              help="Per-packet metrics CSV.")
@click.option("--mode", type=click.Choice(["instantaneous", "cumulative"]),
              default="instantaneous", show_default=True)
@click.option("--window-us", type=int, default=10_000, show_default=True,
              help="Packet window for metrics.")
@add_options(filter_options)
def cmd_filter(input_path, output, verdicts_path, metrics_path, mode, window_us,
               config_path, s, dt_ba_us, dt_refr_us, dt_pol_us, order, strict_hotpixel):
    """Denoise an event stream (CSV or AEDAT 2.0 input)."""
    try:
        cfg = _build_filter_config(config_path, s, dt_ba_us, dt_refr_us,
                                   dt_pol_us, order, strict_hotpixel)
        stream, _labels = _read_stream(input_path)
        filtered, log = flt.filter_stream(stream, cfg)
        formats.write_csv(filtered, output)
        outputs = [output]
        if verdicts_path:
            with open(verdicts_path, "w") as fh:
                fh.write("index,passed,caught_by\n")
                for i in range(len(log)):
                    v = log.verdict(i)
                    fh.write(f"{i},{int(v.passed)},{v.caught_by or ''}\n")
            outputs.append(verdicts_path)
        if metrics_path:
            series = metrics.build_series(log, packetize(stream, window_us), mode)
            metrics.series_to_csv(series, metrics_path)
            outputs.append(metrics_path)
        summary = {"received": len(stream), "caught": log.total_caught,
                   "pct_filtered": round(metrics.pct_filtered(len(stream), log.total_caught), 2)
                   if len(stream) else 100.0,
                   "caught_by_filter": log.counts()}
        _write_manifest(str(output) + ".manifest.yaml", "filter", [input_path],
                        flt.config_to_dict(cfg), outputs, summary)
        click.echo(f"{len(stream)} events in, {len(filtered)} out "
                   f"({summary['pct_filtered']}% filtered)")
    except EvstreamError as exc:
        raise click.ClickException(str(exc))


@main.command("synth")
@click.argument("script_path", type=click.Path(exists=True))
@click.option("-o", "--output", required=True, type=click.Path(),
              help="Labeled event CSV.")
def cmd_synth(script_path, output):
    """Render a scene script to a ground-truth-labeled event CSV."""
    try:
        script = synth.load_scene_script(script_path)
        labeled = synth.render_scene(script)
        formats.write_csv(labeled.stream, output, labels=labeled.labels,
                          label_names=synth.LABEL_NAMES)
        _write_manifest(str(output) + ".manifest.yaml", "synth", [script_path],
                        synth.scene_to_dict(script), [output],
                        {"events": len(labeled), "label_counts": labeled.label_counts()})
        click.echo(f"rendered {len(labeled)} events")
    except EvstreamError as exc:
        raise click.ClickException(str(exc))


@main.command("tbr")
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("outdir", type=click.Path())
@click.option("--bin-us", type=int, default=4166, show_default=True)
@click.option("--bit-order", type=click.Choice(["msb", "lsb"]), default="msb",
              show_default=True)
@click.option("--png", is_flag=True, help="Also write PNG copies.")
@click.option("--zero-fill-partial", is_flag=True,
              help="Keep a trailing partial frame with zero-filled bins.")
def cmd_tbr(input_path, outdir, bin_us, bit_order, png, zero_fill_partial):
    """Encode a stream into temporal-binary PGM frames plus a manifest CSV."""
    try:
        cfg = tbr.TbrConfig(bin_us=bin_us, bit_order=bit_order)
        stream, _labels = _read_stream(input_path)
        frames = tbr.encode_stream(stream, cfg, zero_fill_partial=zero_fill_partial)
        manifest_csv = tbr.export_frames(frames, outdir, png=png)
        _write_manifest(Path(outdir) / "run.manifest.yaml", "tbr", [input_path],
                        {"bin_us": bin_us, "bit_order": bit_order,
                         "crop_width": cfg.crop_width, "pad_height": cfg.pad_height},
                        [outdir, manifest_csv], {"frames": len(frames)})
        click.echo(f"wrote {len(frames)} frames to {outdir}")
    except EvstreamError as exc:
        raise click.ClickException(str(exc))


@main.command("roi")
@click.argument("input_path", type=click.Path(exists=True))
@click.option("-o", "--output", required=True, type=click.Path(),
              help="Feature CSV.")
@click.option("--interval-us", type=int, default=30_000, show_default=True)
@click.option("--activity-threshold", type=int, default=3, show_default=True)
@click.option("--min-events", type=int, default=10, show_default=True)
@click.option("--zero-center", "do_zero_center", is_flag=True,
              help="Also write a zero-centred variant plus the means sidecar.")
@click.option("--mirror", "do_mirror", is_flag=True,
              help="Also write the mirrored-sequence variant.")
def cmd_roi(input_path, output, interval_us, activity_threshold, min_events,
            do_zero_center, do_mirror):
    """Extract per-interval square-ROI features (center, size, activity)."""
    try:
        cfg = roi.RoiConfig(interval_us=interval_us,
                            activity_threshold=activity_threshold,
                            min_events=min_events)
        stream, _labels = _read_stream(input_path)
        features = roi.extract_sequence(stream, cfg)
        roi.write_features(features, output)
        outputs = [output]
        if do_zero_center:
            centred, means = roi.zero_center(features)
            zc_path = str(output) + ".zero_centered.csv"
            roi.write_features(centred, zc_path)
            sidecar = str(output) + ".means.yaml"
            with open(sidecar, "w") as fh:
                yaml.safe_dump(means, fh)
            outputs += [zc_path, sidecar]
        if do_mirror:
            mirrored = roi.mirror_sequence(features, stream.geometry)
            m_path = str(output) + ".mirrored.csv"
            roi.write_features(mirrored, m_path)
            outputs.append(m_path)
        _write_manifest(str(output) + ".manifest.yaml", "roi", [input_path],
                        {"interval_us": interval_us,
                         "activity_threshold": activity_threshold,
                         "min_events": min_events},
                        outputs,
                        {"intervals": len(features),
                         "valid": sum(f.valid for f in features)})
        click.echo(f"wrote {len(features)} interval features")
    except EvstreamError as exc:
        raise click.ClickException(str(exc))


@main.command("report")
@click.argument("metrics_csvs", nargs=-1, required=True,
                type=click.Path(exists=True))
@click.option("-o", "--outdir", required=True, type=click.Path())
def cmd_report(metrics_csvs, outdir):
    """Summarize metrics CSVs into a table plus an SVG line chart."""
    try:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        rows = []
        series_by_label = {}
        for path in metrics_csvs:
            series = metrics.series_from_csv(path)
            label = Path(path).stem
            received = sum(p.received for p in series.packets)
            caught = sum(p.caught for p in series.packets)
            rows.append((label, received, caught))
            series_by_label[label] = series
        table = metrics.summary_table(rows)
        (outdir / "summary.txt").write_text(table + "\n")
        chart = outdir / "pct_filtered.svg"
        metrics.plot_series_svg(series_by_label, chart)
        _write_manifest(outdir / "run.manifest.yaml", "report", list(metrics_csvs),
                        {}, [outdir / "summary.txt", chart], {"inputs": len(rows)})
        click.echo(table)
    except EvstreamError as exc:
        raise click.ClickException(str(exc))


if __name__ == "__main__":
    sys.exit(main())
