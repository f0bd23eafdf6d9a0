"""Brainwave band-power trait identification pipeline."""

__version__ = "0.1.0"

from .core import BANDS, EMOTIONS, TRAITS, BandPowerRow, Emotion, Segment, TraitLabels

__all__ = [
    "BANDS",
    "EMOTIONS",
    "TRAITS",
    "BandPowerRow",
    "Emotion",
    "Segment",
    "TraitLabels",
]
