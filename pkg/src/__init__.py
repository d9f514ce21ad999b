"""oscsym - numerical workbench for pseudo-differential operators with oscillating symbols."""

__version__ = "1.0.0"
