"""Numerical spectral covers over the sphere.

Builds two-sheeted (and experimentally n-sheeted) spectral covers from
rational differential data, computes their periods, Abelian differentials,
theta kernels and Bergman objects, and evaluates the variational residue
formulas for those objects against finite-difference oracles.
"""

from __future__ import annotations

__version__ = "0.1.0"
