"""
eigsur: certified reduced-basis surrogates for the smallest eigenvalue of a
parametrized symmetric-definite pencil.

This package provides tools for:
- Describing affine pencils A(omega), B(omega) with symbolic coefficients
- Computing eigenvalue and eigenvector derivatives via a bordered system
- Building a reduced subspace greedily with Bauer-Fike / Kato-Temple bounds
- Evaluating, auditing and comparing the resulting surrogates
"""

__version__ = "1.0.0"
