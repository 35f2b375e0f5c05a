"""Engines module: Fock, Gaussian and measurement back ends."""
from . import fock_engine
from . import gaussian_engine
from . import measurement

__all__ = ["fock_engine", "gaussian_engine", "measurement"]
