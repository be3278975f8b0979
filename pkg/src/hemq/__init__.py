"""hemq: Huber-energy measure quantization."""

__version__ = "0.1.0"
