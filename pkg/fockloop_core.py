"""
Fockloop Core Module

Configuration, the exception hierarchy and the gate-matrix cache shared by every
engine. Gate matrices are built per (gate, parameters, cutoff) and memoized so
repeated time bins reuse them.
"""

import logging
import os
import threading
from collections import OrderedDict
from typing import Callable, Hashable, Optional

import numpy as np
from dotenv import load_dotenv

# ============ CONFIGURATION & LOGGING ============

__version__ = "0.1.0"

load_dotenv()

DEFAULT_CUTOFF = int(os.getenv("FOCKLOOP_CUTOFF", "12"))
PROTOCOL_CUTOFF = int(os.getenv("FOCKLOOP_PROTOCOL_CUTOFF", "24"))
TRUNCATION_TOL = float(os.getenv("FOCKLOOP_TRUNCATION_TOL", "1e-6"))
TRUNCATION_WARN = float(os.getenv("FOCKLOOP_TRUNCATION_WARN", "1e-8"))
GATE_PADDING = int(os.getenv("FOCKLOOP_GATE_PADDING", "40"))
GATE_CACHE_SIZE = int(os.getenv("FOCKLOOP_GATE_CACHE_SIZE", "512"))
HOMODYNE_RANGE = float(os.getenv("FOCKLOOP_HOMODYNE_RANGE", "8.0"))
HOMODYNE_POINTS = int(os.getenv("FOCKLOOP_HOMODYNE_POINTS", "4096"))
LOG_LEVEL = os.getenv("FOCKLOOP_LOG_LEVEL", "INFO")

logger = logging.getLogger(__name__)

# ============ EXCEPTIONS ============


class FockloopError(Exception):
    """Base exception for simulator errors."""
    pass


class TruncationError(FockloopError):
    """Population pushed above the Fock cutoff exceeds the tolerance."""

    def __init__(self, leakage: float, tolerance: float, context: str = ""):
        self.leakage = leakage
        self.tolerance = tolerance
        where = f" in {context}" if context else ""
        super().__init__(
            f"Truncation leakage {leakage:.3e}{where} exceeds tolerance {tolerance:.1e}"
        )


class InvalidMode(FockloopError):
    """Mode index outside the state's mode range."""
    pass


class InvalidEta(FockloopError):
    """Transmission / efficiency outside [0, 1]."""
    pass


class InvalidRate(FockloopError):
    """Negative repetition rate or empty repeat-until-success buffer."""
    pass


class ZeroNormError(FockloopError):
    """Operation would produce a state of zero norm."""
    pass


class ShapeMismatch(FockloopError):
    """Operands disagree on mode count, cutoff or dimension."""
    pass


class NonGaussianOp(FockloopError):
    """Non-Gaussian operation passed to the covariance engine."""
    pass


class NonSymmetric(FockloopError):
    """Matrix expected to be symmetric is not."""
    pass


class NonZeroMean(FockloopError):
    """Boson-sampling kernels require a zero-mean Gaussian state."""
    pass


class ScaleExceeded(FockloopError):
    """Requested problem is beyond desk scale."""
    pass


class ZeroDensity(FockloopError):
    """Conditioning on a homodyne outcome of vanishing density."""
    pass


class ZeroProbability(FockloopError):
    """Conditioning on a photon-count outcome of vanishing probability."""
    pass


class NoPeakFound(FockloopError):
    """No local maximum above threshold in a marginal density."""
    pass


class GridTooCoarse(FockloopError):
    """Phase-space grid fails the normalization check."""
    pass


class SectorTooLarge(FockloopError):
    """Fixed-photon-number sector exceeds the exact-diagonalization limit."""
    pass


class UnschedulableError(FockloopError):
    """Circuit event cannot be placed on the loop machine."""

    def __init__(self, message: str, event_index: Optional[int] = None, event: object = None):
        self.event_index = event_index
        self.event = event
        super().__init__(message)


class ManifestError(FockloopError):
    """Experiment manifest failed to parse or validate."""

    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        prefix = f"{field_path}: " if field_path else ""
        super().__init__(f"{prefix}{message}")


class ExportError(FockloopError):
    """Writing or reading a result file failed."""
    pass


# ============ TRUNCATION GUARD ============


def check_leakage(leakage: float, tolerance: Optional[float] = None, context: str = "") -> None:
    """Raise when leakage exceeds the tolerance, warn inside the warning band."""
    tol = TRUNCATION_TOL if tolerance is None else tolerance
    if leakage > tol:
        raise TruncationError(leakage, tol, context)
    if leakage > min(TRUNCATION_WARN, tol):
        logger.warning("Truncation leakage %.3e in %s (warn level %.1e)", leakage, context or "gate", TRUNCATION_WARN)


# ============ GATE MATRIX CACHE ============


class GateCache:
    """
    Thread-safe LRU cache of gate matrices keyed by (gate, parameters, cutoff).

    Cached arrays are marked read-only so concurrent readers can share them.
    """

    def __init__(self, max_size: int = GATE_CACHE_SIZE):
        self.max_size = max_size
        self._store: "OrderedDict[Hashable, np.ndarray]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get_or_build(self, key: Hashable, builder: Callable[[], np.ndarray]) -> np.ndarray:
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                self.hits += 1
                return self._store[key]
        matrix = builder()
        matrix.setflags(write=False)
        with self._lock:
            self.misses += 1
            self._store[key] = matrix
            self._store.move_to_end(key)
            while len(self._store) > self.max_size:
                self._store.popitem(last=False)
        logger.debug("Gate cache miss for %s", key[0] if isinstance(key, tuple) else key)
        return matrix

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        return len(self._store)


gate_cache = GateCache()


def parameter_key(*values: complex) -> tuple:
    """Hashable, rounding-stable key for gate parameters."""
    key = []
    for v in values:
        c = complex(v)
        key.append((round(c.real, 14), round(c.imag, 14)))
    return tuple(key)
