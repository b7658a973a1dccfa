"""Chemical auto- and heteroencoders built from scratch."""

__version__ = "0.1.0"
