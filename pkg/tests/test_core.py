"""
Tests for the shared error types, truncation guard and gate cache.
"""

import logging

import numpy as np
import pytest

from fockloop_core import (
    FockloopError,
    GateCache,
    ManifestError,
    TruncationError,
    UnschedulableError,
    check_leakage,
    parameter_key,
)


class TestErrors:
    """Tests for the error hierarchy."""

    def test_truncation_error_fields(self):
        """Test TruncationError keeps leakage and tolerance."""
        error = TruncationError(2e-5, 1e-6, "squeeze")
        assert isinstance(error, FockloopError)
        assert error.leakage == 2e-5
        assert error.tolerance == 1e-6
        assert "squeeze" in str(error)

    def test_manifest_error_path_prefix(self):
        """Test ManifestError prefixes the dotted field path."""
        error = ManifestError("must be positive", "params.n_rounds")
        assert str(error) == "params.n_rounds: must be positive"
        assert error.field_path == "params.n_rounds"

    def test_unschedulable_error_carries_event(self):
        """Test UnschedulableError records the offending event index."""
        error = UnschedulableError("no kerr module", event_index=3, event="kerr")
        assert error.event_index == 3
        assert error.event == "kerr"


class TestCheckLeakage:
    """Tests for the truncation guard."""

    def test_raises_above_tolerance(self):
        """Test leakage above the tolerance raises."""
        with pytest.raises(TruncationError):
            check_leakage(1e-3, 1e-6, "displace")

    def test_silent_below_warning_band(self, caplog):
        """Test tiny leakage passes without a warning."""
        with caplog.at_level(logging.WARNING):
            check_leakage(1e-12, 1e-6)
        assert not caplog.records

    def test_warns_inside_band(self, caplog):
        """Test leakage between the warn level and the tolerance logs a warning."""
        with caplog.at_level(logging.WARNING):
            check_leakage(1e-7, 1e-6, "beamsplitter")
        assert any("beamsplitter" in r.getMessage() for r in caplog.records)


class TestGateCache:
    """Tests for the LRU gate cache."""

    def test_hit_and_miss_counts(self):
        """Test the second lookup of a key is a hit and skips the builder."""
        cache = GateCache(max_size=4)
        calls = []

        def build():
            calls.append(1)
            return np.eye(2)

        cache.get_or_build(("eye", 2), build)
        cache.get_or_build(("eye", 2), build)
        assert len(calls) == 1
        assert (cache.hits, cache.misses) == (1, 1)

    def test_cached_arrays_are_read_only(self):
        """Test cached matrices cannot be mutated."""
        cache = GateCache()
        matrix = cache.get_or_build("m", lambda: np.zeros(3))
        with pytest.raises(ValueError):
            matrix[0] = 1.0

    def test_eviction(self):
        """Test the least recently used entry is evicted."""
        cache = GateCache(max_size=2)
        cache.get_or_build("a", lambda: np.zeros(1))
        cache.get_or_build("b", lambda: np.zeros(1))
        cache.get_or_build("a", lambda: np.zeros(1))
        cache.get_or_build("c", lambda: np.zeros(1))
        assert len(cache) == 2
        cache.get_or_build("b", lambda: np.ones(1))
        assert cache.misses == 4

    def test_clear(self):
        """Test clear empties the store and resets counters."""
        cache = GateCache()
        cache.get_or_build("a", lambda: np.zeros(1))
        cache.clear()
        assert len(cache) == 0
        assert cache.misses == 0

    def test_parameter_key_is_rounding_stable(self):
        """Test keys ignore float noise below 1e-14."""
        assert parameter_key(0.1 + 0.2) == parameter_key(0.3)
        assert parameter_key(1j) != parameter_key(1)
