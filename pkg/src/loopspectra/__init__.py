"""Transfer-matrix spectroscopy of loop models with topological defect lines."""
__version__ = "0.1.0"
