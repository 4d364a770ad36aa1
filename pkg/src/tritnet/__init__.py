"""Ternary logic gate networks with trainable polynomial neurons."""

__version__ = "0.1.0"
