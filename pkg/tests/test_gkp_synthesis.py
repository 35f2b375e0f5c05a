"""
Tests for grid-state synthesis and its metrics.
"""

import numpy as np
import pytest
from scipy.integrate import trapezoid

from fockloop_core import NoPeakFound, ShapeMismatch
from src.engines import fock_engine
from src.models.experiment_models import GKP_REFERENCE, BreedingConfig, GkpParams
from src.protocols import gkp_synthesis
from src.protocols.cat_breeding import make_small_cat
from src.utils.peak_analysis import peak_analysis, spacing_deviation

SMALL_TREE = BreedingConfig(n_rounds=1)
REFERENCE_TREE = BreedingConfig(r_initial=0.48, n_rounds=2, feed_forward=True, accept_window=0.75)
REFERENCE_TRAJECTORIES = 1000


@pytest.fixture(scope="module")
def reference_ensembles():
    """Accepted output states of the reference tree with and without feed-forward."""
    ensembles = {}
    for feed_forward in (True, False):
        cfg = REFERENCE_TREE.model_copy(update={"feed_forward": feed_forward})
        trajectories, metrics = gkp_synthesis.synthesize_gkp(cfg, REFERENCE_TRAJECTORIES, seed=2024)
        ensembles[feed_forward] = ([t for t in trajectories if t.accepted], metrics)
    return ensembles


class TestStabilizers:
    """Tests for stabilizer expectations and the metric bundle."""

    def test_vacuum_stabilizers(self):
        """Test <D(beta)> = exp(-beta^2/2) on the vacuum."""
        vac = fock_engine.vacuum(1, 32)
        s_x = gkp_synthesis.stabilizer_values([vac], gkp_synthesis.STABILIZER_SHIFT)
        s_l = gkp_synthesis.stabilizer_values([vac], gkp_synthesis.LOGICAL_SHIFT)
        assert abs(s_x[0]) == pytest.approx(np.exp(-np.pi), abs=1e-8)
        assert abs(s_l[0]) == pytest.approx(np.exp(-np.pi / 4), abs=1e-8)

    def test_mixture_averages_before_magnitude(self):
        """Test opposite phases cancel in a mixture."""
        shift = gkp_synthesis.LOGICAL_SHIFT
        plus = fock_engine.coherent_state(0.4j, 32)
        minus = fock_engine.coherent_state(-0.4j, 32)
        values = gkp_synthesis.stabilizer_values([plus, minus], shift)
        mixed = abs(values.mean())
        expected = abs(np.cos(2 * shift / np.sqrt(2) * 0.4)) * np.exp(-(shift ** 2) / 4)
        assert mixed == pytest.approx(expected, abs=1e-8)
        assert mixed < abs(values[0])

    def test_density_and_ket_agree(self):
        """Test stabilizers of rho equal those of the ket."""
        state = fock_engine.cat_state(1.0, 1, 24)
        ket = gkp_synthesis.stabilizer_values([state], 1.3)[0]
        rho = gkp_synthesis.stabilizer_values([fock_engine.to_density(state)], 1.3)[0]
        assert rho == pytest.approx(ket, abs=1e-12)

    def test_multimode_rejected(self):
        """Test stabilizers need single-mode states."""
        with pytest.raises(ShapeMismatch):
            gkp_synthesis.stabilizer_values([fock_engine.vacuum(2, 4)], 1.0)

    def test_vacuum_metrics(self):
        """Test the vacuum has one peak with variance 1/2 in both quadratures."""
        metrics = gkp_synthesis.gkp_metrics(fock_engine.vacuum(1, 32))
        assert metrics.n_peaks_x == 1
        assert metrics.peak_spacing is None
        assert metrics.var_x_peak == pytest.approx(0.5, abs=1e-4)
        assert metrics.var_product == pytest.approx(0.25, abs=1e-4)

    def test_zero_outcome_tree_builds_comb(self):
        """Test zero-outcome breeding of x-lobed cats gives a multi-peak x marginal."""
        leaf = make_small_cat(0.48, gkp_synthesis.GKP_CUTOFF, axis="x")
        state, records = gkp_synthesis.breed_tree(leaf, BreedingConfig(n_rounds=2), outcome=0.0)
        assert len(records) == 3
        metrics = gkp_synthesis.gkp_metrics(state)
        assert metrics.n_peaks_x >= 3


class TestSynthesis:
    """Tests for Monte-Carlo grid-state synthesis."""

    def test_reproducible(self):
        """Test equal seeds give equal records and metrics."""
        first, m1 = gkp_synthesis.synthesize_gkp(SMALL_TREE, 3, seed=42, cutoff=24)
        second, m2 = gkp_synthesis.synthesize_gkp(SMALL_TREE, 3, seed=42, cutoff=24)
        assert [t.records[0].outcome for t in first] == [t.records[0].outcome for t in second]
        assert m1 == m2

    def test_streams_do_not_depend_on_count(self):
        """Test trajectory i sees the same outcomes whatever the ensemble size."""
        two, _ = gkp_synthesis.synthesize_gkp(SMALL_TREE, 2, seed=9, cutoff=24)
        three, _ = gkp_synthesis.synthesize_gkp(SMALL_TREE, 3, seed=9, cutoff=24)
        assert [t.records[0].outcome for t in two] == [t.records[0].outcome for t in three[:2]]

    def test_metric_bookkeeping(self):
        """Test weights, acceptance fraction and the reference annotation."""
        trajectories, metrics = gkp_synthesis.synthesize_gkp(SMALL_TREE, 4, seed=1, cutoff=24)
        assert all(t.weight == pytest.approx(0.25) for t in trajectories)
        assert metrics.acceptance_fraction == 1.0
        assert metrics.n_trajectories == 4
        assert metrics.reference == GKP_REFERENCE

    def test_window_rejects_everything(self):
        """Test an impossibly narrow window leaves nothing to grade."""
        cfg = BreedingConfig(n_rounds=1, accept_window=1e-9)
        with pytest.raises(NoPeakFound):
            gkp_synthesis.synthesize_gkp(cfg, 2, seed=3, cutoff=24)

    def test_output_filter_adds_record(self):
        """Test output filtering appends an x-homodyne record per trajectory."""
        cfg = BreedingConfig(n_rounds=1, accept_window=3.0, filter_target="output")
        trajectories, _ = gkp_synthesis.synthesize_gkp(cfg, 2, seed=5, cutoff=24)
        for trajectory in trajectories:
            assert len(trajectory.records) == 2
            assert trajectory.records[-1].theta == 0.0

    def test_marginal_table(self):
        """Test the marginal table covers the grid and integrates to one."""
        trajectories, _ = gkp_synthesis.synthesize_gkp(SMALL_TREE, 2, seed=8, cutoff=24)
        rows = gkp_synthesis.marginal_table(trajectories)
        grid = gkp_synthesis.metric_grid()
        assert len(rows) == grid.size
        full = np.array([row["density_full"] for row in rows])
        assert trapezoid(full, grid) == pytest.approx(1.0, abs=1e-4)
        assert rows[0].keys() == {"x", "density_full", "density_filtered"}


class TestReferenceSynthesis:
    """Tests for the r = 0.48, two-round tree with a 0.75 acceptance window."""

    def test_comb_is_evenly_spaced(self, reference_ensembles):
        """Test the accepted x marginal shows at least three peaks within 5% of even spacing."""
        accepted, metrics = reference_ensembles[True]
        grid = gkp_synthesis.metric_grid()
        density = gkp_synthesis.ensemble_marginal(
            [t.state for t in accepted], [t.weight for t in accepted], 0.0, grid
        )
        peaks = peak_analysis(density, grid)
        assert len(peaks) >= 3
        assert metrics.n_peaks_x == len(peaks)
        assert spacing_deviation(peaks) < 0.05

    def test_central_peak_below_vacuum(self, reference_ensembles):
        """Test the central-peak variance product is below the vacuum value 1/4."""
        _, metrics = reference_ensembles[True]
        assert metrics.var_product < 0.25

    def test_feed_forward_raises_stabilizer(self, reference_ensembles):
        """Test feed-forward raises s_x by more than three standard errors."""
        estimates = []
        for feed_forward in (True, False):
            accepted, metrics = reference_ensembles[feed_forward]
            values = gkp_synthesis.stabilizer_values([t.state for t in accepted], gkp_synthesis.STABILIZER_SHIFT)
            assert metrics.s_x == pytest.approx(abs(values.mean()), abs=1e-9)
            estimates.append((metrics.s_x, np.std(values) / np.sqrt(len(values))))
        (s_ff, se_ff), (s_plain, se_plain) = estimates
        assert s_ff - s_plain > 3.0 * np.hypot(se_ff, se_plain)

    def test_default_ensemble_size(self):
        """Test the gkp experiment defaults to a thousand trajectories."""
        assert GkpParams().n_trajectories == REFERENCE_TRAJECTORIES
