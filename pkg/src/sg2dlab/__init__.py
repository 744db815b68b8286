"""Painleve analysis and reduction checks for a coupled sine-Gordon system in 2+1 dimensions."""

__version__ = "0.1.0"
