"""Path-level thermal simulation and melt-pool analytics for laser powder bed fusion."""

from ._core import (
    IoError,
    MaterialModel,
    NumericalError,
    ParseError,
    ValidationError,
    analyze_frames,
    compare,
    ellipse_fit,
    gen_path,
    load_material,
    simulate,
)

__all__ = [
    "IoError",
    "MaterialModel",
    "NumericalError",
    "ParseError",
    "ValidationError",
    "analyze_frames",
    "compare",
    "ellipse_fit",
    "gen_path",
    "load_material",
    "simulate",
]
