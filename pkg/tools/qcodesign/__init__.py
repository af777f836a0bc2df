"""Quantum-assisted online co-design of controller gains and Lyapunov certificates."""

__version__ = "0.1.0"
