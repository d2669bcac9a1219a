"""Reference generation-backend service speaking the lane-scene wire protocol."""

__version__ = "0.1.0"
