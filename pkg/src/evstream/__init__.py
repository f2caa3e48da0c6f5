"""Event-camera stream toolkit: subsampled-map denoising filters, temporal
binary frame encoding, ROI feature extraction, synthetic ground-truth scenes
and filter-performance metrics."""

from evstream.events import (
    Event,
    EventPacket,
    EventStream,
    SensorGeometry,
    DAVIS240,
    mirror_event,
    mirror_stream,
    packetize,
)
from evstream.filters import (
    FilterConfig,
    FilterState,
    FilterVerdict,
    VerdictLog,
    apply_pipeline,
    filter_stream,
    subsample_coords,
)

__version__ = "0.1.0"
