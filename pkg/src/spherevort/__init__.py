"""Exact solutions, Lie symmetries, verification and a pseudo-spectral
solver for the barotropic vorticity equation on the rotating sphere."""

__version__ = "0.1.0"
