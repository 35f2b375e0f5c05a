"""
Tests for Wigner functions and their negativity.
"""

import numpy as np
import pytest

from fockloop_core import GridTooCoarse
from src.engines import fock_engine, measurement
from src.models.circuit_model import Kerr
from src.utils import wigner_analysis


class TestWigner:
    """Tests for Wigner evaluation on a grid."""

    def test_vacuum_peak_and_normalization(self):
        """Test the vacuum has W(0, 0) = 1/pi and integrates to one."""
        grid = wigner_analysis.wigner(fock_engine.vacuum(1, 6))
        assert grid.value_at(0.0, 0.0) == pytest.approx(1 / np.pi, abs=1e-10)
        assert grid.integral() == pytest.approx(1.0, abs=1e-6)
        assert grid.resolution == (201, 201)

    def test_single_photon_is_negative_at_origin(self):
        """Test W(0, 0) = -1/pi for |1>."""
        grid = wigner_analysis.wigner(fock_engine.fock_state([1], 6))
        assert wigner_analysis.minimum(grid) == pytest.approx(-1 / np.pi, abs=1e-8)

    def test_odd_cat_negativity(self):
        """Test an odd cat reaches -1/pi at the origin and has positive negativity volume."""
        grid = wigner_analysis.wigner(fock_engine.cat_state(1.5, -1, 30))
        assert grid.value_at(0.0, 0.0) == pytest.approx(-1 / np.pi, abs=1e-8)
        assert wigner_analysis.negativity_volume(grid) > 0.05

    def test_coherent_state_is_nonnegative(self):
        """Test a coherent state has no negativity."""
        grid = wigner_analysis.wigner(fock_engine.coherent_state(1.0 + 0.5j, 30))
        assert wigner_analysis.minimum(grid) > -1e-9
        assert wigner_analysis.negativity_volume(grid) < 1e-9

    def test_mixed_state_input(self):
        """Test density operators give the same Wigner function as kets."""
        state = fock_engine.cat_state(1.0, 1, 20)
        pure = wigner_analysis.wigner(state, points=81)
        mixed = wigner_analysis.wigner(fock_engine.to_density(state), points=81)
        assert np.allclose(pure.values, mixed.values, atol=1e-12)

    def test_multimode_reduction(self):
        """Test a multimode state is reduced to the requested mode."""
        grid = wigner_analysis.wigner(fock_engine.fock_state([0, 1], 4), mode=1, points=101)
        assert grid.value_at(0.0, 0.0) == pytest.approx(-1 / np.pi, abs=1e-8)

    def test_grid_too_coarse(self):
        """Test a grid missing the state's support raises GridTooCoarse."""
        with pytest.raises(GridTooCoarse):
            wigner_analysis.wigner(fock_engine.coherent_state(4.0, 50), half_width=2.0, points=41)

    def test_check_can_be_disabled(self):
        """Test check=False returns the truncated grid."""
        grid = wigner_analysis.wigner(fock_engine.coherent_state(4.0, 50), half_width=2.0, points=41, check=False)
        assert grid.integral() < 0.5

    def test_kerr_state_has_negativity(self):
        """Test the Kerr-evolved coherent state has a negative region."""
        state = fock_engine.apply_gate(fock_engine.coherent_state(0.5, 12), Kerr(mode=0, strength=np.pi / 3))
        grid = wigner_analysis.wigner(state)
        assert wigner_analysis.minimum(grid) < 0.0


class TestMarginals:
    """Tests for marginals read off a Wigner grid."""

    def test_marginal_matches_homodyne_density(self):
        """Test the x marginal of W equals the homodyne density."""
        state = fock_engine.cat_state(1.2, -1, 25)
        grid = wigner_analysis.wigner(state, half_width=6.0, points=241)
        from_wigner = wigner_analysis.wigner_marginal(grid, "x")
        direct = measurement.marginal_distribution(state, 0, 0.0, grid.x)
        assert np.allclose(from_wigner, direct, atol=1e-6)

    def test_p_marginal(self):
        """Test the p marginal integrates to one."""
        grid = wigner_analysis.wigner(fock_engine.fock_state([2], 8))
        marginal = wigner_analysis.wigner_marginal(grid, "p")
        assert marginal.sum() * (grid.p[1] - grid.p[0]) == pytest.approx(1.0, abs=1e-6)

    def test_bad_axis(self):
        """Test only x and p are valid axes."""
        grid = wigner_analysis.wigner(fock_engine.vacuum(1, 4), points=21)
        with pytest.raises(ValueError):
            wigner_analysis.wigner_marginal(grid, "q")
