"""Quality metrics: QoS, bitstream (BS) and video-quality (VQ) meters."""

from .builtin import BUILTIN_MEASURES, default_registry
from .core import AnalysisContext, MeasureResult, MeterRegistry, Skip

__all__ = ["AnalysisContext", "BUILTIN_MEASURES", "MeasureResult", "MeterRegistry", "Skip", "default_registry"]
