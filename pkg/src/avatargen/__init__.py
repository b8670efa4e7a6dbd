"""Synthetic human-pose image generation from rigged scans."""

__version__ = "0.1.0"
