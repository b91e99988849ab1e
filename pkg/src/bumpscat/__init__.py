"""Resonances, trapped sets and the fractal Weyl law for gaussian-bump scattering."""

from .classical import ESCAPE, Itinerary, SectionConfig, SectionPoint
from .model import ModelConfig, PhasePoint, ScalingAngle

__all__ = [
    "ESCAPE",
    "Itinerary",
    "ModelConfig",
    "PhasePoint",
    "ScalingAngle",
    "SectionConfig",
    "SectionPoint",
]
__version__ = "0.1.0"
