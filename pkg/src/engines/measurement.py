"""
Measurement

Homodyne and photon-number-resolving measurements with conditional-state
output, heralded Fock sources and quadrature marginals.

Quadrature eigenfunctions: <x_theta|n> = exp(-i n theta) psi_n(x), where
psi_n are the Hermite functions for vacuum variance 1/2. They are built by the
upward recurrence

    psi_0(x)     = pi^(-1/4) exp(-x^2/2)
    psi_{n+1}(x) = sqrt(2/(n+1)) x psi_n(x) - sqrt(n/(n+1)) psi_{n-1}(x)

which stays stable for the cutoffs used here.
"""

import logging
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from fockloop_core import (
    HOMODYNE_POINTS,
    HOMODYNE_RANGE,
    InvalidEta,
    InvalidMode,
    ShapeMismatch,
    ZeroDensity,
    ZeroNormError,
    ZeroProbability,
    gate_cache,
)
from src.engines import fock_engine
from src.models.circuit_model import MeasureHomodyne, MeasurePnrd, MeasurementRecord
from src.models.state_models import DensityOperator, FockState

logger = logging.getLogger(__name__)

State = Union[FockState, DensityOperator]

DENSITY_FLOOR = 1e-300
PROBABILITY_FLOOR = 1e-14


def default_grid(half_width: float = HOMODYNE_RANGE, points: int = HOMODYNE_POINTS) -> np.ndarray:
    return np.linspace(-half_width, half_width, points)


def _hermite_functions(cutoff: int, grid: np.ndarray) -> np.ndarray:
    table = np.zeros((cutoff, grid.size))
    table[0] = np.pi ** -0.25 * np.exp(-0.5 * grid ** 2)
    if cutoff > 1:
        table[1] = np.sqrt(2.0) * grid * table[0]
    for n in range(1, cutoff - 1):
        table[n + 1] = np.sqrt(2.0 / (n + 1)) * grid * table[n] - np.sqrt(n / (n + 1)) * table[n - 1]
    return table


def quadrature_wavefunctions(cutoff: int, grid) -> np.ndarray:
    """Table psi_n(x) of shape (cutoff, len(grid)), shared read-only per (cutoff, grid)."""
    grid = np.asarray(grid, dtype=float).reshape(-1)
    key = ("hermite", cutoff, grid.size, hash(grid.tobytes()))
    return gate_cache.get_or_build(key, lambda: _hermite_functions(cutoff, grid))


def quadrature_vector(cutoff: int, theta: float, x: float) -> np.ndarray:
    """Coefficients <x_theta|n> for n < cutoff."""
    psi = _hermite_functions(cutoff, np.array([float(x)]))[:, 0]
    return psi * np.exp(-1j * theta * np.arange(cutoff))


def from_wavefunction(psi, grid, cutoff: int) -> FockState:
    """Expand a single-mode position wavefunction sampled on ``grid`` in the Fock basis."""
    grid = np.asarray(grid, dtype=float)
    psi = np.asarray(psi, dtype=complex)
    table = quadrature_wavefunctions(cutoff, grid)
    coeffs = trapezoid(table * psi[None, :], grid, axis=1)
    return fock_engine.normalized(coeffs, mode_count=1, cutoff=cutoff)


def _check_mode(state: State, mode: int) -> None:
    if mode < 0 or mode >= state.mode_count:
        raise InvalidMode(f"Mode {mode} out of range for {state.mode_count}-mode state")


def _contract(state: State, mode: int, ket: np.ndarray) -> Tuple[State, float]:
    """Contract the measured mode with <outcome| and renormalize the rest."""
    m, d = state.mode_count, state.cutoff
    if isinstance(state, FockState):
        out = np.tensordot(ket, state.tensor, axes=([0], [mode]))
        weight = float(np.vdot(out, out).real)
        if weight <= DENSITY_FLOOR:
            return None, weight
        conditional = FockState(
            mode_count=m - 1,
            cutoff=d,
            amplitudes=out.reshape(-1) / np.sqrt(weight),
            norm_weight=state.norm_weight * weight,
        )
        return conditional, weight
    out = np.tensordot(ket, state.tensor, axes=([0], [mode]))
    # bra axis of the measured mode moved from m + mode to m - 1 + mode
    out = np.tensordot(ket.conj(), out, axes=([0], [m - 1 + mode]))
    dim = d ** (m - 1)
    matrix = out.reshape(dim, dim)
    weight = float(np.trace(matrix).real)
    if weight <= DENSITY_FLOOR:
        return None, weight
    matrix = matrix / weight
    conditional = DensityOperator(
        mode_count=m - 1,
        cutoff=d,
        matrix=0.5 * (matrix + matrix.conj().T),
        trace_weight=state.trace_weight * weight,
    )
    return conditional, weight


# ============ HOMODYNE ============


def homodyne_project(state: State, mode: int, theta: float, x: float) -> Tuple[State, float]:
    """
    Project ``mode`` onto the rotated-quadrature eigenstate |x_theta>.

    Returns the normalized state of the remaining modes and the outcome
    probability density; the density is folded into the state's weight.

    Raises:
        ZeroDensity: if the outcome has vanishing density.
    """
    _check_mode(state, mode)
    ket = quadrature_vector(state.cutoff, theta, x)
    conditional, density = _contract(state, mode, ket)
    if conditional is None:
        raise ZeroDensity(f"Homodyne outcome x={x:.4f} at theta={theta:.4f} has vanishing density")
    return conditional, density


def marginal_distribution(state: State, mode: int, theta: float, grid=None) -> np.ndarray:
    """Quadrature probability density of one mode on a grid."""
    _check_mode(state, mode)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    d = state.cutoff
    vectors = quadrature_wavefunctions(d, grid).T * np.exp(-1j * theta * np.arange(d))
    if isinstance(state, FockState) and state.mode_count == 1:
        amps = vectors @ state.amplitudes
        return np.abs(amps) ** 2
    rho = fock_engine.partial_trace(state, [mode]).matrix
    density = np.einsum("xn,nm,xm->x", vectors, rho, vectors.conj()).real
    return np.clip(density, 0.0, None)


def homodyne_sample(
    state: State,
    mode: int,
    theta: float,
    rng: np.random.Generator,
    grid=None,
    accept_window: Optional[float] = None,
) -> Tuple[float, State, MeasurementRecord]:
    """
    Draw a homodyne outcome from the exact marginal by inverse CDF and condition on it.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    density = marginal_distribution(state, mode, theta, grid)
    steps = 0.5 * (density[1:] + density[:-1]) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(steps)])
    if cdf[-1] <= 0.0:
        raise ZeroDensity("Quadrature marginal vanishes on the sampling grid")
    cdf /= cdf[-1]
    x = float(np.interp(rng.random(), cdf, grid))
    conditional, weight = homodyne_project(state, mode, theta, x)
    record = MeasurementRecord(kind="homodyne", mode=mode, theta=theta, outcome=x, weight=weight)
    record = record.with_acceptance(accept_window)
    logger.debug("Homodyne sample mode=%d theta=%.3f x=%.4f density=%.4e", mode, theta, x, weight)
    return x, conditional, record


# ============ PHOTON COUNTING ============


def pnrd_project(state: State, mode: int, n: int) -> Tuple[State, float]:
    """
    Project ``mode`` onto |n>; return the renormalized remaining state and P(n).

    Raises:
        ZeroProbability: if P(n) vanishes.
    """
    _check_mode(state, mode)
    if n < 0 or n >= state.cutoff:
        raise ShapeMismatch(f"Photon count {n} is not below cutoff {state.cutoff}")
    ket = np.zeros(state.cutoff)
    ket[n] = 1.0
    conditional, probability = _contract(state, mode, ket)
    if conditional is None or probability <= PROBABILITY_FLOOR:
        raise ZeroProbability(f"Photon count {n} on mode {mode} has probability {probability:.3e}")
    return conditional, probability


def pnrd_record(mode: int, n: int, probability: float) -> MeasurementRecord:
    return MeasurementRecord(kind="pnrd", mode=mode, outcome=n, weight=probability)


def heralded_fock_source(n: int, eta_herald: float, cutoff: int) -> DensityOperator:
    """Heralded |n> degraded by a loss channel of transmission eta_herald."""
    if not 0.0 <= eta_herald <= 1.0:
        raise InvalidEta(f"Heralding efficiency must lie in [0, 1], got {eta_herald}")
    rho = fock_engine.to_density(fock_engine.fock_state([n], cutoff))
    return fock_engine.apply_loss(rho, 0, eta_herald)


# ============ IN-PROGRAM MEASUREMENT EVENTS ============


def _reinsert_vacuum(state: State, mode: int) -> State:
    d = state.cutoff
    if isinstance(state, FockState):
        tensor = np.expand_dims(state.tensor, mode)
        pad = [(0, 0)] * tensor.ndim
        pad[mode] = (0, d - 1)
        tensor = np.pad(tensor, pad)
        return FockState(
            mode_count=state.mode_count + 1, cutoff=d, amplitudes=tensor, norm_weight=state.norm_weight
        )
    m = state.mode_count
    tensor = np.expand_dims(state.tensor, mode)
    tensor = np.expand_dims(tensor, m + 1 + mode)
    pad = [(0, 0)] * tensor.ndim
    pad[mode] = (0, d - 1)
    pad[m + 1 + mode] = (0, d - 1)
    tensor = np.pad(tensor, pad)
    dim = d ** (m + 1)
    return DensityOperator(
        mode_count=m + 1, cutoff=d, matrix=tensor.reshape(dim, dim), trace_weight=state.trace_weight
    )


def project_and_reset(state: State, op: Union[MeasureHomodyne, MeasurePnrd]) -> State:
    """Condition on the event's fixed outcome, then reset the measured bin to vacuum."""
    if isinstance(op, MeasureHomodyne):
        conditional, _ = homodyne_project(state, op.mode, op.theta, op.outcome)
    elif isinstance(op, MeasurePnrd):
        conditional, _ = pnrd_project(state, op.mode, op.outcome)
    else:
        raise ZeroNormError(f"Not a measurement event: {op.kind}")
    return _reinsert_vacuum(conditional, op.mode)
