"""Generalized multilevel amplitude damping channels and their work-extraction functionals."""
__version__ = "0.1.0"
