"""Sliding-window sketches plus a small workbench for learning on drifting streams."""

from .sketches import (
    BYTES_PER_BUCKET,
    BitCountEH,
    Bucket,
    IntMeanEH,
    IntSumEH,
    VarianceEH,
    WindowEstimate,
    memory_footprint,
)
from .windowing import ResolutionConfig, StreamRecord, Summarizer

__version__ = "0.1.0"

__all__ = [
    "BYTES_PER_BUCKET",
    "BitCountEH",
    "Bucket",
    "IntMeanEH",
    "IntSumEH",
    "VarianceEH",
    "WindowEstimate",
    "memory_footprint",
    "ResolutionConfig",
    "StreamRecord",
    "Summarizer",
    "__version__",
]
