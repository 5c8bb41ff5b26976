"""
Basis Factory — Creation of spectral basis instances.

Provides ``create()`` from a descriptor and ``from_config()`` from a
``BasisConfig`` section.
"""

import logging
from typing import Dict, Optional

from pyda_models.models import BasisConfig, BasisKind, WeightMode
from src.core.errors import ConfigurationError
from src.spectral.basis_base import SpectralBasis
from src.spectral.lattice import BasisDescriptor
from src.spectral.sphere import SphereBasis
from src.spectral.torus import TorusBasis

logger = logging.getLogger(__name__)

# Map of basis kind → implementation class
_BASIS_MAP = {
    BasisKind.TORUS: TorusBasis,
    BasisKind.SPHERE: SphereBasis,
}


class BasisFactory:
    """Factory for spectral basis instances."""

    @staticmethod
    def create(descriptor: BasisDescriptor) -> SpectralBasis:
        cls = _BASIS_MAP.get(descriptor.kind)
        if cls is None:
            available = [k.value for k in _BASIS_MAP]
            raise ConfigurationError(
                f"Unknown basis '{descriptor.kind}'. Available: {available}", key="basis.kind"
            )
        logger.debug("Creating %s (dim=%d, weights=%s)", cls.__name__, descriptor.dim, descriptor.weight_mode.value)
        return cls(descriptor)

    @staticmethod
    def from_config(cfg: BasisConfig, weight_mode: Optional[WeightMode] = None) -> SpectralBasis:
        """Create a basis from the ``problem.basis`` section; ``weight_mode`` overrides the section."""
        return BasisFactory.create(BasisDescriptor.from_config(cfg, weight_mode))

    @staticmethod
    def get_available_bases() -> Dict[str, str]:
        return {kind.value: cls.__name__ for kind, cls in _BASIS_MAP.items()}
