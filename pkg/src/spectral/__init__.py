"""src/spectral — Eigenbases, Sobolev scales and field transforms on T^n and S²."""
