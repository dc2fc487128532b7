"""Transformer decoders for linear block codes with systematic and double masks."""

__version__ = "0.1.0"
