"""Numerical spectral estimates for Neumann magnetic Schrödinger operators
with fields of constant intensity: de Gennes model quantities, gauge-invariant
lattice eigenproblems, quasimode upper-bound certificates, theorem bound
evaluators and boundary-localization (Agmon) diagnostics.
"""

from magspec.degennes import THETA0, XI0  # noqa: F401

__version__ = "0.1.0"
