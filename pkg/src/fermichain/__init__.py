"""Chain-mapped tensor-network simulation of fermionic open quantum systems."""

__version__ = "0.1.0"
