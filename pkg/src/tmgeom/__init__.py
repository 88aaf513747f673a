"""Numerical checks for the geometry of tangent bundles of manifolds carrying
a metric connection with torsion."""

__version__ = "0.1.0"
