"""src/solver — Assembly and inversion of the truncated linearized operator."""
