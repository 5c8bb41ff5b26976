"""Test suites for NMSpectral."""
