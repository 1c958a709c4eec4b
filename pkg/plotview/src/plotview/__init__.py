"""Offline figure rendering for the barycenter experiment outputs."""

from .render import KINDS, PlotInputError, PlotSpec, render

__all__ = ["KINDS", "PlotInputError", "PlotSpec", "render"]
