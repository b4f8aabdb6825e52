"""Height functions, tilings and sampling on the d-dimensional simplicial lattice."""

__version__ = "0.1.0"
TOOL_NAME = "simplicial"
