"""DualLife: optimal voluntary retirement with consumption and portfolio choice."""

__version__ = "1.0.0"
