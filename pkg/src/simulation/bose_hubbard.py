"""
Bose-Hubbard Simulation

Trotterized Bose-Hubbard dynamics compiled to beamsplitter and Kerr gates,
checked against exact evolution in the fixed photon-number sector.

Conventions (hbar = 1):
    H = -J sum_<ij> (a_i^dag a_j + h.c.) + (U/2) sum_i n_i (n_i - 1)
    hopping step: BeamSplitter(theta = J dt, phi = pi/2) = exp(i J dt (a_i^dag a_j + h.c.))
    on-site step: Kerr(strength = -U dt / 2) = exp(-i (U/2) dt n (n - 1))
"""

import logging
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import comb

from fockloop_core import SectorTooLarge, ShapeMismatch, TruncationError
from src.engines import fock_engine
from src.models.circuit_model import BeamSplitter, CircuitProgram, Kerr
from src.models.experiment_models import LatticeSpec
from src.models.result_models import FockConfigDistribution
from src.models.state_models import FockState
from src.utils.result_exporter import config_label

logger = logging.getLogger(__name__)

Config = Tuple[int, ...]
BondOrder = Literal["even_odd", "odd_even"]

MAX_SECTOR_DIM = 4096
CONSERVATION_TOL = 1e-9
HOPPING_PHI = np.pi / 2


def basis(n_sites: int, n_photons: int) -> List[Config]:
    """All occupations of ``n_photons`` on ``n_sites``, descending lexicographic order."""
    if n_sites == 1:
        return [(n_photons,)]
    configs = []
    for first in range(n_photons, -1, -1):
        for rest in basis(n_sites - 1, n_photons - first):
            configs.append((first,) + rest)
    return configs


def _sector(spec: LatticeSpec, initial: Sequence[int]) -> List[Config]:
    if len(initial) != spec.n_sites:
        raise ShapeMismatch(f"Initial state {tuple(initial)} does not have {spec.n_sites} sites")
    n_photons = int(sum(initial))
    dim = int(comb(n_photons + spec.n_sites - 1, n_photons, exact=True))
    if dim > MAX_SECTOR_DIM:
        raise SectorTooLarge(f"Sector dimension {dim} exceeds {MAX_SECTOR_DIM}")
    return basis(spec.n_sites, n_photons)


def hamiltonian(spec: LatticeSpec, configs: List[Config]) -> np.ndarray:
    """Dense Hamiltonian on the given sector basis."""
    index = {c: k for k, c in enumerate(configs)}
    h = np.zeros((len(configs), len(configs)))
    for col, config in enumerate(configs):
        occ = np.array(config)
        h[col, col] = 0.5 * spec.U * float(np.sum(occ * (occ - 1)))
        for bond, (i, j) in enumerate(spec.bonds):
            hop = spec.hopping(bond)
            for src, dst in ((j, i), (i, j)):
                if occ[src] == 0:
                    continue
                moved = occ.copy()
                moved[src] -= 1
                moved[dst] += 1
                h[index[tuple(moved)], col] += -hop * np.sqrt(occ[src] * (occ[dst] + 1))
    return h


def exact_state(spec: LatticeSpec, initial: Sequence[int]) -> Tuple[List[Config], np.ndarray]:
    """Sector basis and the exactly evolved amplitude vector at time spec.t."""
    configs = _sector(spec, initial)
    psi0 = np.zeros(len(configs), dtype=complex)
    psi0[configs.index(tuple(initial))] = 1.0
    h = hamiltonian(spec, configs)
    return configs, expm(-1j * spec.t * h) @ psi0


def exact_evolve(spec: LatticeSpec, initial: Sequence[int]) -> FockConfigDistribution:
    """
    Oracle: dense matrix exponential in the N-photon sector.

    Raises:
        SectorTooLarge: if the sector exceeds MAX_SECTOR_DIM.
    """
    configs, psi = exact_state(spec, initial)
    probs = np.abs(psi) ** 2
    return FockConfigDistribution(probabilities={c: float(p) for c, p in zip(configs, probs)})


def energy_expectation(spec: LatticeSpec, initial: Sequence[int]) -> float:
    """<H> of the exactly evolved state at time spec.t."""
    configs, psi = exact_state(spec, initial)
    return float(np.vdot(psi, hamiltonian(spec, configs) @ psi).real)


# ============ TROTTER CIRCUITS ============


def _hopping_layer(spec: LatticeSpec, dt: float, order: BondOrder) -> List[BeamSplitter]:
    bonds = list(enumerate(spec.bonds))
    even = [b for b in bonds if b[0] % 2 == 0]
    odd = [b for b in bonds if b[0] % 2 == 1]
    layers = (even, odd) if order == "even_odd" else (odd, even)
    return [
        BeamSplitter(mode_i=i, mode_j=j, theta=spec.hopping(k) * dt, phi=HOPPING_PHI)
        for layer in layers
        for k, (i, j) in layer
    ]


def _kerr_layer(spec: LatticeSpec, dt: float) -> List[Kerr]:
    return [Kerr(mode=site, strength=-spec.U * dt / 2.0) for site in range(spec.n_sites)]


def trotter_compile(spec: LatticeSpec, n_steps: int, order: BondOrder = "even_odd") -> CircuitProgram:
    """
    Compile spec.t of Bose-Hubbard evolution into ``n_steps`` Trotter steps.

    first_order: hopping (even bonds, then odd) followed by the Kerr layer.
    symmetric: Kerr(dt/2), first bond layer(dt/2), second layer(dt),
    first layer(dt/2), Kerr(dt/2).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if spec.t == 0:
        return CircuitProgram(mode_count=spec.n_sites, ops=[])
    dt = spec.t / n_steps
    if spec.splitting == "first_order":
        step = _hopping_layer(spec, dt, order) + _kerr_layer(spec, dt)
    else:
        half_hop = _hopping_layer(spec, dt / 2.0, order)
        full_hop = _hopping_layer(spec, dt, order)
        first_count = sum(1 for k, _ in enumerate(spec.bonds) if (k % 2 == 0) == (order == "even_odd"))
        first_half, second_full = half_hop[:first_count], full_hop[first_count:]
        step = _kerr_layer(spec, dt / 2.0) + first_half + second_full + first_half + _kerr_layer(spec, dt / 2.0)
    return CircuitProgram(mode_count=spec.n_sites, ops=step * n_steps)


def config_distribution(state: FockState, configs: Iterable[Config]) -> FockConfigDistribution:
    """
    Probabilities of ``configs`` read off a pure Fock state.

    Raises:
        TruncationError: if the configurations miss more than CONSERVATION_TOL
            of the probability (photon number not conserved).
    """
    tensor = state.tensor
    probs = {tuple(c): float(abs(tensor[tuple(c)]) ** 2) for c in configs}
    total = sum(probs.values())
    if abs(total - 1.0) > CONSERVATION_TOL:
        raise TruncationError(abs(1.0 - total), CONSERVATION_TOL, "photon-number sector")
    return FockConfigDistribution(probabilities=probs)


def simulate_dynamics(
    spec: LatticeSpec,
    initial: Sequence[int],
    n_steps: int,
    cutoff: Optional[int] = None,
    order: BondOrder = "even_odd",
) -> FockConfigDistribution:
    """Run the compiled Trotter program on the Fock engine (cutoff N + 1 by default)."""
    configs = _sector(spec, initial)
    cutoff = int(sum(initial)) + 1 if cutoff is None else cutoff
    state = fock_engine.fock_state(initial, cutoff)
    program = trotter_compile(spec, n_steps, order=order)
    final = fock_engine.run_program(program, state)
    logger.debug("Simulated %s for t=%.3f with %d steps", tuple(initial), spec.t, n_steps)
    return config_distribution(final, configs)


def sweep_and_timeseries(
    template: LatticeSpec,
    initial_states: Sequence[Sequence[int]],
    u_over_j: Sequence[float],
    t_grid: Sequence[float],
    n_steps: int,
) -> List[Dict[str, object]]:
    """
    Trotter and oracle probabilities on every (U/J, t, initial) grid point.

    Rows carry u_over_j, t, initial, config, p_trotter, p_exact, tv_distance,
    one row per sector configuration.
    """
    if not initial_states or not u_over_j or not t_grid:
        raise ValueError("grids must be nonempty")
    rows: List[Dict[str, object]] = []
    for ratio in u_over_j:
        for t in t_grid:
            spec = template.with_updates(U=ratio * template.J, t=t)
            for initial in initial_states:
                trotter = simulate_dynamics(spec, initial, n_steps)
                exact = exact_evolve(spec, initial)
                tv = trotter.tv_distance(exact)
                for config in exact.configs:
                    rows.append(
                        {
                            "u_over_j": float(ratio),
                            "t": float(t),
                            "initial": config_label(initial),
                            "config": config_label(config),
                            "p_trotter": trotter.get(config),
                            "p_exact": exact.get(config),
                            "tv_distance": tv,
                        }
                    )
            logger.info("U/J=%.2f t=%.2f done", ratio, t)
    return rows
