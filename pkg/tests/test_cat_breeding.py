"""
Tests for small cats, breeding rounds and the compass state.
"""

import numpy as np
import pytest
from scipy.integrate import trapezoid

from fockloop_core import ShapeMismatch
from src.engines import fock_engine, measurement
from src.models.experiment_models import BreedingConfig
from src.models.state_models import DensityOperator
from src.protocols import cat_breeding
from src.utils.wigner_analysis import minimum, wigner

NO_FEED_FORWARD = BreedingConfig(feed_forward=False)


def p_mean(state):
    grid = measurement.default_grid()
    density = measurement.marginal_distribution(state, 0, np.pi / 2, grid)
    return trapezoid(grid * density, grid)


def best_fit(state, axis="p"):
    fits = [cat_breeding.fit_cat_amplitude(state, parity=parity, axis=axis) for parity in (-1, 1)]
    return max(fits, key=lambda fit: fit[1])


class TestSmallCats:
    """Tests for squeezed single-photon cats and the amplitude fit."""

    def test_squeezed_photon_is_odd(self):
        """Test S(0.3)|1> keeps odd parity."""
        state = cat_breeding.make_small_cat(0.3)
        assert fock_engine.parity_expectation(state) == pytest.approx(-1.0, abs=1e-10)

    def test_squeezed_photon_fits_odd_cat(self):
        """Test S(0.3)|1> is close to an odd cat."""
        alpha, fid = cat_breeding.fit_cat_amplitude(cat_breeding.make_small_cat(0.3), parity=-1, axis="x")
        assert 0.3 < alpha < 1.5
        assert fid > 0.99

    def test_fit_recovers_exact_cat(self):
        """Test the fit returns the amplitude of an exact cat."""
        alpha, fid = cat_breeding.fit_cat_amplitude(fock_engine.cat_state(1.2, -1, 24), parity=-1, axis="x")
        assert alpha == pytest.approx(1.2, abs=1e-3)
        assert fid == pytest.approx(1.0, abs=1e-6)

    def test_axis_orientation(self):
        """Test p-axis cats fit along p and not along x."""
        state = cat_breeding.make_small_cat(0.4, axis="p")
        _, fid_p = cat_breeding.fit_cat_amplitude(state, axis="p")
        _, fid_x = cat_breeding.fit_cat_amplitude(state, axis="x")
        assert fid_p > 0.98
        assert fid_p > fid_x

    def test_lossy_herald_gives_mixed_cat(self):
        """Test an imperfect herald produces a mixed state with weaker parity."""
        state = cat_breeding.make_small_cat(0.3, herald_eta=0.9)
        assert isinstance(state, DensityOperator)
        assert -1.0 < fock_engine.parity_expectation(state) < -0.7

    def test_negative_squeezing(self):
        """Test negative squeezing is refused."""
        with pytest.raises(ValueError):
            cat_breeding.make_small_cat(-0.1)

    def test_fit_needs_single_mode(self):
        """Test multimode states cannot be fitted."""
        with pytest.raises(ShapeMismatch):
            cat_breeding.fit_cat_amplitude(fock_engine.vacuum(2, 4))


class TestSuperpositionFit:
    """Tests for the multi-component coherent-state fit."""

    def test_exact_cat_in_span(self):
        """Test an exact cat has unit fidelity with its two-component span."""
        state = fock_engine.cat_state(1.3, 1, 24)
        assert cat_breeding.superposition_fidelity(state, 1.3, 2) == pytest.approx(1.0, abs=1e-10)

    def test_rotated_span(self):
        """Test the span angle selects the lobe direction."""
        state = fock_engine.cat_state(1.3j, -1, 24)
        assert cat_breeding.superposition_fidelity(state, 1.3, 2, angle=np.pi / 2) == pytest.approx(1.0, abs=1e-10)
        assert cat_breeding.superposition_fidelity(state, 1.3, 2, angle=0.0) < 0.9

    def test_fit_superposition_recovers_amplitude(self):
        """Test the fit locates the amplitude of a four-component state."""
        kets = [fock_engine.coherent_state(1.5 * np.exp(1j * np.pi / 2 * k), 30).amplitudes for k in range(4)]
        state = fock_engine.normalized(kets[0] + kets[1] - kets[2] - kets[3], 1, 30)
        alpha, fid = cat_breeding.fit_superposition(state, 4)
        assert alpha == pytest.approx(1.5, abs=1e-2)
        assert fid == pytest.approx(1.0, abs=1e-6)


class TestBreedRound:
    """Tests for one breeding round."""

    def test_large_cats_grow_by_sqrt_two(self):
        """Test zero-outcome breeding of p-lobed cats gives an even cat sqrt(2) larger."""
        cat = fock_engine.cat_state(1.5j, -1, 30)
        kept, record = cat_breeding.breed_round(cat, cat, NO_FEED_FORWARD, outcome=0.0)
        alpha, fid = cat_breeding.fit_cat_amplitude(kept, parity=1, axis="p")
        assert alpha / 1.5 == pytest.approx(np.sqrt(2), rel=0.02)
        assert fid > 0.99
        assert record.theta == pytest.approx(np.pi / 2)

    def test_small_cats_grow(self):
        """Test breeding two S(0.3)|1> cats at outcome zero amplifies the cat."""
        cat = cat_breeding.make_small_cat(0.3, axis="p")
        alpha_in, _ = cat_breeding.fit_cat_amplitude(cat, parity=-1, axis="p")
        kept, _ = cat_breeding.breed_round(cat, cat, NO_FEED_FORWARD, outcome=0.0)
        alpha_out, fid = best_fit(kept)
        assert alpha_out / alpha_in > 1.3
        assert fid > 0.95

    def test_feed_forward_shifts_p(self):
        """Test the corrective kick moves <p> by -gain * outcome."""
        cat = cat_breeding.make_small_cat(0.3, axis="p")
        plain, _ = cat_breeding.breed_round(cat, cat, NO_FEED_FORWARD, outcome=0.5)
        kicked, _ = cat_breeding.breed_round(cat, cat, BreedingConfig(feed_forward_gain=0.8), outcome=0.5)
        assert p_mean(kicked) - p_mean(plain) == pytest.approx(-0.4, abs=1e-6)

    def test_acceptance_window(self):
        """Test ancilla outcomes outside the window are flagged."""
        cat = cat_breeding.make_small_cat(0.3)
        cfg = BreedingConfig(accept_window=0.75)
        _, inside = cat_breeding.breed_round(cat, cat, cfg, outcome=0.5)
        _, outside = cat_breeding.breed_round(cat, cat, cfg, outcome=1.0)
        assert inside.accepted and not outside.accepted

    def test_output_filter_leaves_ancilla_record(self):
        """Test output filtering does not flag the ancilla record."""
        cat = cat_breeding.make_small_cat(0.3)
        cfg = BreedingConfig(accept_window=0.1, filter_target="output")
        _, record = cat_breeding.breed_round(cat, cat, cfg, outcome=1.0)
        assert record.accepted

    def test_loss_per_step(self):
        """Test step loss returns a mixed state."""
        cat = cat_breeding.make_small_cat(0.3)
        kept, _ = cat_breeding.breed_round(cat, cat, BreedingConfig(loss_eta_per_step=0.9), outcome=0.0)
        assert isinstance(kept, DensityOperator)

    def test_sampled_round_is_reproducible(self):
        """Test equal seeds give equal outcomes."""
        cat = cat_breeding.make_small_cat(0.3)
        _, first = cat_breeding.breed_round(cat, cat, BreedingConfig(), rng=np.random.default_rng(11))
        _, second = cat_breeding.breed_round(cat, cat, BreedingConfig(), rng=np.random.default_rng(11))
        assert first.outcome == second.outcome

    def test_needs_rng_or_outcome(self):
        """Test a round without randomness or a fixed outcome is refused."""
        cat = cat_breeding.make_small_cat(0.3)
        with pytest.raises(ValueError):
            cat_breeding.breed_round(cat, cat, BreedingConfig())

    def test_cutoff_mismatch(self):
        """Test inputs at different cutoffs are refused."""
        with pytest.raises(ShapeMismatch):
            cat_breeding.breed_round(fock_engine.vacuum(1, 8), fock_engine.vacuum(1, 9), BreedingConfig(), outcome=0.0)


class TestCompass:
    """Tests for the heralded compass state."""

    def test_compass_heralding(self):
        """Test the compass is single-mode with a proper heralding probability."""
        state, probability = cat_breeding.make_compass(0.6)
        assert state.mode_count == 1
        assert 0.0 < probability < 1.0

    def test_four_lobes_beat_two(self):
        """Test a four-component fit describes the compass better than a two-component one."""
        state, _ = cat_breeding.make_compass(0.6)
        _, fid_two = cat_breeding.fit_superposition(state, 2, angle=np.pi / 4)
        _, fid_four = cat_breeding.fit_superposition(state, 4, angle=np.pi / 4)
        assert fid_four > fid_two

    def test_four_fold_symmetry(self):
        """Test W is even in x and symmetric under x <-> p on a square grid."""
        state, _ = cat_breeding.make_compass(0.6)
        grid = wigner(state)
        values = grid.values
        assert np.max(np.abs(values - values[:, ::-1])) < 1e-6
        assert np.max(np.abs(values - values.T)) < 1e-6

    def test_negativity(self):
        """Test the compass Wigner function goes negative."""
        state, _ = cat_breeding.make_compass(0.6)
        assert minimum(wigner(state)) < 0.0

    def test_unsqueezed_inputs(self):
        """Test r = 0 heralds two photons with probability 1/2 and still returns the state."""
        state, probability = cat_breeding.make_compass(0.0)
        assert probability == pytest.approx(0.5, abs=1e-9)
        assert state.mode_count == 1
        assert fock_engine.populations(state, 0).sum() == pytest.approx(1.0, abs=1e-12)
