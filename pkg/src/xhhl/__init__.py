"""HHL workbench on an exact statevector simulator."""

__version__ = "0.1.0"
