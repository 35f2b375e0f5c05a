"""Protocols module: cat breeding, compass and GKP synthesis, rate arithmetic."""
from . import cat_breeding
from . import gkp_synthesis
from . import rate_model

__all__ = ["cat_breeding", "gkp_synthesis", "rate_model"]
