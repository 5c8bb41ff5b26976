"""NMSpectral - Spectral Nash-Moser solver for perturbed elliptic equations on T^n and S^2."""

__version__ = "0.1.0"
