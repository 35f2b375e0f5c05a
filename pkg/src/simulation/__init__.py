"""Simulation module: Bose-Hubbard dynamics and the loop-machine compiler."""
from . import bose_hubbard
from . import loop_compiler

__all__ = ["bose_hubbard", "loop_compiler"]
