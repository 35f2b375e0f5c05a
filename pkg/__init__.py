"""
Fockloop

Desk-scale simulator of a time-bin photonic quantum processor: truncated Fock
and Gaussian covariance engines, measurement-conditioned protocols (cat
breeding, compass and GKP states), Trotterized Bose-Hubbard dynamics and a
loop-machine scheduler.

Requires:
    - numpy, scipy
    - thewalrus (hafnians, Gaussian A/Q matrices)
    - qutip (Wigner functions)
    - pydantic, python-dotenv

License: MIT
"""

try:
    from fockloop_core import FockloopError, __version__

    __all__ = ["__version__", "FockloopError"]
except ImportError:
    # Allow importing package metadata even when dependencies aren't available
    __version__ = "0.1.0"
    __all__ = ["__version__"]
