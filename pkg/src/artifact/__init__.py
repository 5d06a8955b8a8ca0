"""Twisted torsion, Ruelle zeta functions and geodesic spectra of cusped
hyperbolic 3-manifolds.

Modules
-------
repn        symmetric-power representations of SL(2, C)
words       free-group words and Fox derivatives
manifold    fixtures, spin lifts and cusp data
spectrum    closed-geodesic enumeration and spectral measures
zeta        truncated Ruelle zeta functions
torsion     twisted chain complexes and normalized torsion
filling     Dehn-filled fixtures and surgery factors
analysis    torsion sequences, volume asymptotics and moment inversion
acceptance  end-to-end acceptance checks
cli         command-line entry point
"""

__version__ = "0.1.0"
