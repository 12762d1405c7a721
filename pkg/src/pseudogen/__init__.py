"""Pseudo-label-guided anomaly generation for tabular anomaly detection."""

__version__ = "0.1.0"
