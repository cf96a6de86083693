"""Numerical tools for stark hypersurfaces in complex projective space.

Pointwise austere/stark checks on shape operators, reduction of stark shape
operators to normal form, and the integration pipeline that builds stark
hypersurfaces in CP^2 from a seed (first integrals, surface frames, helices).
"""

from .errors import StarkError

__all__ = ["StarkError"]
__version__ = "0.1.0"
