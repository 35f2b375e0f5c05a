"""
Cat Breeding

Small cats from inline-squeezed single photons, one breeding round (50:50
beamsplitter, p homodyne on the ancilla, optional p feed-forward), the
compass state, and the cat-amplitude fit oracle.

Orientation: a cat with lobes along x is S(r, pi/2)|1> (anti-squeezed along
x) and matches |alpha> - |-alpha> with real alpha; lobes along p come from
S(r, 0)|1> and match imaginary alpha. Breeding measures p on the ancilla, so
p-lobed cats grow into larger cats at outcome 0, while x-lobed cats build an
x-quadrature comb.
"""

import logging
from typing import Literal, Optional, Tuple, Union

import numpy as np
from scipy.linalg import orth
from scipy.optimize import minimize_scalar

from fockloop_core import PROTOCOL_CUTOFF, ShapeMismatch
from src.engines import fock_engine, measurement
from src.models.circuit_model import BeamSplitter, Displace, Loss, MeasurementRecord, Squeeze
from src.models.experiment_models import BreedingConfig
from src.models.state_models import DensityOperator, FockState

logger = logging.getLogger(__name__)

State = Union[FockState, DensityOperator]
Axis = Literal["x", "p"]

BREED_THETA = np.pi / 2
FIT_ALPHA_MAX = 3.0
FIT_TOL = 1e-4
FIT_SCAN_POINTS = 61

_SQUEEZE_PHI = {"x": np.pi / 2, "p": 0.0}


def make_small_cat(
    r: float,
    cutoff: int = PROTOCOL_CUTOFF,
    axis: Axis = "x",
    herald_eta: float = 1.0,
    tolerance: Optional[float] = None,
) -> State:
    """
    Inline-squeezed single photon S(r)|1>, an odd cat with lobes along ``axis``.

    With herald_eta < 1 the photon comes from a lossy heralded source and the
    result is a DensityOperator.
    """
    if r < 0:
        raise ValueError("squeezing must be non-negative")
    if herald_eta < 1.0:
        photon: State = measurement.heralded_fock_source(1, herald_eta, cutoff)
    else:
        photon = fock_engine.fock_state([1], cutoff)
    return fock_engine.apply_gate(photon, Squeeze(mode=0, r=r, phi=_SQUEEZE_PHI[axis]), tolerance=tolerance)


def _cat(amplitude: float, parity: int, axis: Axis, cutoff: int) -> FockState:
    alpha = amplitude if axis == "x" else 1j * amplitude
    return fock_engine.cat_state(alpha, parity=parity, cutoff=cutoff)


def fit_cat_amplitude(
    state: State, parity: int = -1, axis: Axis = "x", alpha_max: float = FIT_ALPHA_MAX
) -> Tuple[float, float]:
    """
    Best-fit cat amplitude and its fidelity.

    A coarse scan over [0, alpha_max] picks the bracket, then a bounded scalar
    search refines it to 1e-4.
    """
    if state.mode_count != 1:
        raise ShapeMismatch("Cat fit needs a single-mode state")
    floor = 1e-3

    def infidelity(alpha: float) -> float:
        if alpha < floor and parity == -1:
            alpha = floor
        return 1.0 - fock_engine.fidelity(_cat(alpha, parity, axis, state.cutoff), state)

    scan = np.linspace(floor, alpha_max, FIT_SCAN_POINTS)
    best = int(np.argmin([infidelity(a) for a in scan]))
    step = scan[1] - scan[0]
    lo, hi = max(floor, scan[best] - step), min(alpha_max, scan[best] + step)
    result = minimize_scalar(infidelity, bounds=(lo, hi), method="bounded", options={"xatol": FIT_TOL})
    alpha = float(result.x)
    return alpha, 1.0 - float(result.fun)


def superposition_fidelity(state: State, alpha: float, n_components: int, angle: float = 0.0) -> float:
    """
    Best fidelity of ``state`` with any superposition of the coherent states
    |alpha * exp(i (angle + 2 pi k / n))>, k = 0..n-1.

    Equals the largest eigenvalue of P rho P, P the projector onto their span.
    """
    if state.mode_count != 1:
        raise ShapeMismatch("Superposition fit needs a single-mode state")
    phases = angle + 2 * np.pi * np.arange(n_components) / n_components
    kets = np.column_stack([fock_engine.coherent_state(alpha * np.exp(1j * t), state.cutoff).amplitudes for t in phases])
    basis = orth(kets, rcond=1e-10)
    rho = fock_engine.to_density(state).matrix
    reduced = basis.conj().T @ rho @ basis
    return float(np.linalg.eigvalsh(reduced)[-1])


def fit_superposition(
    state: State, n_components: int, angle: float = 0.0, alpha_max: float = FIT_ALPHA_MAX
) -> Tuple[float, float]:
    """Amplitude maximizing superposition_fidelity, found like fit_cat_amplitude."""
    floor = 1e-2

    def infidelity(alpha: float) -> float:
        return 1.0 - superposition_fidelity(state, alpha, n_components, angle)

    scan = np.linspace(floor, alpha_max, FIT_SCAN_POINTS)
    best = int(np.argmin([infidelity(a) for a in scan]))
    step = scan[1] - scan[0]
    lo, hi = max(floor, scan[best] - step), min(alpha_max, scan[best] + step)
    result = minimize_scalar(infidelity, bounds=(lo, hi), method="bounded", options={"xatol": FIT_TOL})
    return float(result.x), 1.0 - float(result.fun)


def _tensor(a: State, b: State) -> State:
    if a.cutoff != b.cutoff:
        raise ShapeMismatch(f"Breeding inputs differ in cutoff ({a.cutoff} vs {b.cutoff})")
    if a.mode_count != 1 or b.mode_count != 1:
        raise ShapeMismatch("Breeding inputs must be single-mode")
    if isinstance(a, FockState) and isinstance(b, FockState):
        return FockState(
            mode_count=2,
            cutoff=a.cutoff,
            amplitudes=np.kron(a.amplitudes, b.amplitudes),
            norm_weight=a.norm_weight * b.norm_weight,
        )
    ra, rb = fock_engine.to_density(a), fock_engine.to_density(b)
    return DensityOperator(
        mode_count=2, cutoff=a.cutoff, matrix=np.kron(ra.matrix, rb.matrix), trace_weight=ra.trace_weight * rb.trace_weight
    )


def breed_round(
    a: State,
    b: State,
    cfg: BreedingConfig,
    rng: Optional[np.random.Generator] = None,
    outcome: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> Tuple[State, MeasurementRecord]:
    """
    Interfere ``a`` (kept) and ``b`` (ancilla) on a 50:50 beamsplitter and
    measure the ancilla's p quadrature.

    The outcome is sampled from ``rng`` unless fixed by ``outcome``. With
    feed-forward the kept mode is displaced along p by -gain * outcome; with
    loss_eta_per_step < 1 the kept mode then passes a loss channel.
    The record is marked rejected when |outcome| >= accept_window.

    Raises:
        ZeroDensity: if a fixed outcome has vanishing density.
    """
    joint = _tensor(a, b)
    joint = fock_engine.apply_gate(joint, BeamSplitter(mode_i=0, mode_j=1, theta=np.pi / 4), tolerance=tolerance)
    if outcome is None:
        if rng is None:
            raise ValueError("breed_round needs an rng or a fixed outcome")
        p_m, kept, record = measurement.homodyne_sample(joint, 1, BREED_THETA, rng)
    else:
        p_m = float(outcome)
        kept, density = measurement.homodyne_project(joint, 1, BREED_THETA, p_m)
        record = MeasurementRecord(kind="homodyne", mode=1, theta=BREED_THETA, outcome=p_m, weight=density)
    if cfg.accept_window is not None and cfg.filter_target == "ancilla":
        record = record.with_acceptance(cfg.accept_window)

    if cfg.feed_forward and p_m != 0.0:
        kick = -cfg.feed_forward_gain * p_m
        kept = fock_engine.apply_gate(kept, Displace.of(0, 1j * kick / np.sqrt(2.0)), tolerance=tolerance)
    if cfg.loss_eta_per_step < 1.0:
        kept = fock_engine.apply_gate(fock_engine.to_density(kept), Loss(mode=0, eta=cfg.loss_eta_per_step))
    logger.debug("Breed round outcome p=%.4f accepted=%s", p_m, record.accepted)
    return kept, record


def make_compass(
    r: float, cutoff: int = PROTOCOL_CUTOFF, herald_n: int = 2, tolerance: Optional[float] = None
) -> Tuple[FockState, float]:
    """
    Compass state: an x-lobed and a p-lobed cat on a 50:50 beamsplitter,
    heralded by ``herald_n`` photons on the ancilla.

    Returns the normalized state and the heralding probability.

    Raises:
        ZeroProbability: if the herald count cannot occur.
    """
    cat_x = make_small_cat(r, cutoff, axis="x", tolerance=tolerance)
    cat_p = make_small_cat(r, cutoff, axis="p", tolerance=tolerance)
    joint = _tensor(cat_x, cat_p)
    joint = fock_engine.apply_gate(joint, BeamSplitter(mode_i=0, mode_j=1, theta=np.pi / 4), tolerance=tolerance)
    compass, probability = measurement.pnrd_project(joint, 1, herald_n)
    logger.info("Compass heralded with n=%d at probability %.4e", herald_n, probability)
    return compass, probability
