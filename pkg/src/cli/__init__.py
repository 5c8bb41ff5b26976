"""
CLI Gateway — Config-driven experiment runner for NMSpectral.
"""

from src.cli.cli_gateway import CLIGateway, main

__all__ = ["CLIGateway", "main"]
