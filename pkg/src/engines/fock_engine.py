"""
Fock Engine

Exact state-vector and density-matrix evolution in a truncated multimode Fock
basis. States are immutable values: every operation returns a new state.

Single-mode Gaussian gates (displacement, squeezing) are exponentiated on a
padded basis and cropped to the cutoff, so population the untruncated gate
would push above level d-1 shows up as lost norm. The beamsplitter conserves
total photon number and is exponentiated exactly inside each number sector.
Phase and Kerr gates are diagonal and introduce no truncation error.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm, svdvals
from scipy.special import comb, gammaln

from fockloop_core import (
    DEFAULT_CUTOFF,
    GATE_PADDING,
    InvalidEta,
    InvalidMode,
    ShapeMismatch,
    TRUNCATION_TOL,
    ZeroNormError,
    check_leakage,
    gate_cache,
    parameter_key,
)
from src.models.circuit_model import (
    BeamSplitter,
    CircuitProgram,
    Displace,
    Kerr,
    Loss,
    Phase,
    Squeeze,
)
from src.models.result_models import TruncationReport
from src.models.state_models import DensityOperator, FockState

logger = logging.getLogger(__name__)

State = Union[FockState, DensityOperator]

# ============ STATE CONSTRUCTORS ============


def vacuum(mode_count: int = 1, cutoff: int = DEFAULT_CUTOFF) -> FockState:
    """Multimode vacuum |0,...,0>."""
    amps = np.zeros(cutoff ** mode_count, dtype=complex)
    amps[0] = 1.0
    return FockState(mode_count=mode_count, cutoff=cutoff, amplitudes=amps)


def fock_state(occupations: Sequence[int], cutoff: int = DEFAULT_CUTOFF) -> FockState:
    """Product Fock state |n_0, n_1, ...>."""
    occupations = tuple(int(n) for n in occupations)
    if any(n < 0 or n >= cutoff for n in occupations):
        raise ShapeMismatch(f"Occupations {occupations} do not fit below cutoff {cutoff}")
    amps = np.zeros((cutoff,) * len(occupations), dtype=complex)
    amps[occupations] = 1.0
    return FockState(mode_count=len(occupations), cutoff=cutoff, amplitudes=amps)


def _coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    if alpha == 0:
        amps = np.zeros(cutoff, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha: complex, cutoff: int = DEFAULT_CUTOFF) -> FockState:
    """Single-mode coherent state, renormalized after truncation."""
    amps = _coherent_amplitudes(complex(alpha), cutoff)
    kept = float(np.vdot(amps, amps).real)
    return FockState(mode_count=1, cutoff=cutoff, amplitudes=amps / np.sqrt(kept), norm_weight=kept)


def cat_state(alpha: complex, parity: int = -1, cutoff: int = DEFAULT_CUTOFF) -> FockState:
    """Cat state |alpha> + parity*|-alpha>, normalized (parity -1 is the odd cat)."""
    if parity not in (1, -1):
        raise ValueError("parity must be +1 (even) or -1 (odd)")
    plus = _coherent_amplitudes(complex(alpha), cutoff)
    minus = _coherent_amplitudes(-complex(alpha), cutoff)
    amps = plus + parity * minus
    norm = float(np.vdot(amps, amps).real)
    if norm < 1e-300:
        raise ZeroNormError("Odd cat of zero amplitude does not exist")
    return FockState(mode_count=1, cutoff=cutoff, amplitudes=amps / np.sqrt(norm))


def normalized(amplitudes: np.ndarray, mode_count: int, cutoff: int, norm_weight: float = 1.0) -> FockState:
    """Build a FockState from unnormalized amplitudes, folding the norm into norm_weight."""
    amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = float(np.vdot(amplitudes, amplitudes).real)
    if norm <= 1e-300:
        raise ZeroNormError("State has zero norm")
    return FockState(
        mode_count=mode_count,
        cutoff=cutoff,
        amplitudes=amplitudes / np.sqrt(norm),
        norm_weight=norm_weight * norm,
    )


def to_density(state: State) -> DensityOperator:
    """Promote a pure state to a density operator."""
    if isinstance(state, DensityOperator):
        return state
    psi = state.amplitudes
    return DensityOperator(
        mode_count=state.mode_count,
        cutoff=state.cutoff,
        matrix=np.outer(psi, psi.conj()),
        trace_weight=state.norm_weight,
    )


# ============ GATE MATRICES ============


def _annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def _padded_unitary(generator_builder, cutoff: int, padding: int) -> np.ndarray:
    dim = cutoff + padding
    a = _annihilation(dim)
    return expm(generator_builder(a))[:cutoff, :cutoff]


def displacement_matrix(beta: complex, cutoff: int, padding: int = GATE_PADDING) -> np.ndarray:
    """<m|D(beta)|n> for m, n < cutoff."""
    beta = complex(beta)
    key = ("displace", parameter_key(beta), cutoff, padding)
    return gate_cache.get_or_build(
        key, lambda: _padded_unitary(lambda a: beta * a.conj().T - np.conj(beta) * a, cutoff, padding)
    )


def squeeze_matrix(r: float, phi: float, cutoff: int, padding: int = GATE_PADDING) -> np.ndarray:
    """<m|S(r, phi)|n> for m, n < cutoff."""
    key = ("squeeze", parameter_key(r, phi), cutoff, padding)

    def generator(a: np.ndarray) -> np.ndarray:
        ad = a.conj().T
        return 0.5 * r * (np.exp(-2j * phi) * (a @ a) - np.exp(2j * phi) * (ad @ ad))

    return gate_cache.get_or_build(key, lambda: _padded_unitary(generator, cutoff, padding))


def phase_diagonal(phi: float, cutoff: int) -> np.ndarray:
    return np.exp(1j * phi * np.arange(cutoff))


def kerr_diagonal(strength: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    return np.exp(1j * strength * n * (n - 1))


def beamsplitter_matrix(theta: float, phi: float, cutoff: int) -> np.ndarray:
    """
    Beamsplitter as a (d, d, d, d) tensor [out_i, out_j, in_i, in_j].

    Each total-photon sector N is exponentiated on its full (N+1)-dimensional
    basis, then cropped to occupations below the cutoff.
    """
    key = ("beamsplitter", parameter_key(theta, phi), cutoff)

    def build() -> np.ndarray:
        d = cutoff
        tensor = np.zeros((d, d, d, d), dtype=complex)
        forward = theta * np.exp(1j * phi)
        backward = theta * np.exp(-1j * phi)
        for total in range(2 * d - 1):
            size = total + 1
            gen = np.zeros((size, size), dtype=complex)
            for k in range(size):
                # a_i^dag a_j : |k, N-k> -> sqrt((k+1)(N-k)) |k+1, N-k-1>
                if k + 1 < size:
                    gen[k + 1, k] += forward * np.sqrt((k + 1) * (total - k))
                # a_i a_j^dag : |k, N-k> -> sqrt(k(N-k+1)) |k-1, N-k+1>
                if k > 0:
                    gen[k - 1, k] -= backward * np.sqrt(k * (total - k + 1))
            block = expm(gen)
            ks = [k for k in range(size) if k < d and total - k < d]
            for out_k in ks:
                for in_k in ks:
                    tensor[out_k, total - out_k, in_k, total - in_k] = block[out_k, in_k]
        return tensor

    return gate_cache.get_or_build(key, build)


def annihilation_matrix(cutoff: int) -> np.ndarray:
    return gate_cache.get_or_build(("annihilate", cutoff), lambda: _annihilation(cutoff))


# ============ TENSOR KERNELS ============


def _apply_single(tensor: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(matrix, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def _apply_diagonal(tensor: np.ndarray, diag: np.ndarray, axis: int) -> np.ndarray:
    shape = [1] * tensor.ndim
    shape[axis] = diag.size
    return tensor * diag.reshape(shape)


def _apply_pair(tensor: np.ndarray, matrix4: np.ndarray, axis_i: int, axis_j: int) -> np.ndarray:
    out = np.tensordot(matrix4, tensor, axes=([2, 3], [axis_i, axis_j]))
    return np.moveaxis(out, [0, 1], [axis_i, axis_j])


def _check_modes(state: State, modes: Sequence[int]) -> None:
    for mode in modes:
        if mode < 0 or mode >= state.mode_count:
            raise InvalidMode(f"Mode {mode} out of range for {state.mode_count}-mode state")


def _op_action(op, cutoff: int):
    """Return (kind, payload) describing how op acts on one ket index set."""
    if isinstance(op, Phase):
        return "diag", phase_diagonal(op.phi, cutoff)
    if isinstance(op, Kerr):
        return "diag", kerr_diagonal(op.strength, cutoff)
    if isinstance(op, Displace):
        return "single", displacement_matrix(op.beta, cutoff)
    if isinstance(op, Squeeze):
        return "single", squeeze_matrix(op.r, op.phi, cutoff)
    if isinstance(op, BeamSplitter):
        return "pair", beamsplitter_matrix(op.theta, op.phi, cutoff)
    raise TypeError(f"Unsupported gate {type(op).__name__}")


def _transform(tensor: np.ndarray, op, action, offset: int = 0, conjugate: bool = False) -> np.ndarray:
    kind, payload = action
    if conjugate:
        payload = payload.conj()
    if kind == "diag":
        return _apply_diagonal(tensor, payload, op.mode + offset)
    if kind == "single":
        return _apply_single(tensor, payload, op.mode + offset)
    return _apply_pair(tensor, payload, op.mode_i + offset, op.mode_j + offset)


# ============ GATE APPLICATION ============


def apply_gate(state: State, op, tolerance: Optional[float] = None) -> State:
    """
    Apply one gate to a pure or mixed state and return the same carrier kind.

    Raises:
        TruncationError: if the gate pushes more than ``tolerance`` of the
            population above the cutoff.
        InvalidMode: if the gate addresses a mode the state does not have.
        ShapeMismatch: for Loss on a pure state (promote with ``to_density``).
    """
    _check_modes(state, op.modes)
    if isinstance(op, Loss):
        if isinstance(state, FockState):
            raise ShapeMismatch("Loss needs a DensityOperator; promote the pure state first")
        return apply_loss(state, op.mode, op.eta)

    action = _op_action(op, state.cutoff)
    if isinstance(state, FockState):
        out = _transform(state.tensor, op, action)
        norm = float(np.vdot(out, out).real)
        if action[0] != "diag":
            check_leakage(max(0.0, 1.0 - norm), tolerance, op.kind)
        return FockState(
            mode_count=state.mode_count,
            cutoff=state.cutoff,
            amplitudes=out / np.sqrt(norm),
            norm_weight=state.norm_weight * (norm if action[0] != "diag" else 1.0),
        )

    m = state.mode_count
    out = _transform(state.tensor, op, action)
    out = _transform(out, op, action, offset=m, conjugate=True)
    dim = state.cutoff ** m
    matrix = out.reshape(dim, dim)
    trace = float(np.trace(matrix).real)
    if action[0] != "diag":
        check_leakage(max(0.0, 1.0 - trace), tolerance, op.kind)
    matrix = matrix / trace
    matrix = 0.5 * (matrix + matrix.conj().T)
    return DensityOperator(
        mode_count=m,
        cutoff=state.cutoff,
        matrix=matrix,
        trace_weight=state.trace_weight * (trace if action[0] != "diag" else 1.0),
    )


def loss_kraus(eta: float, cutoff: int) -> np.ndarray:
    """Kraus operators K_k = sum_n sqrt(C(n,k)) eta^((n-k)/2) (1-eta)^(k/2) |n-k><n|."""
    kraus = np.zeros((cutoff, cutoff, cutoff))
    for k in range(cutoff):
        for n in range(k, cutoff):
            kraus[k, n - k, n] = np.sqrt(comb(n, k)) * eta ** ((n - k) / 2) * (1 - eta) ** (k / 2)
    return kraus


def apply_loss(rho: DensityOperator, mode: int, eta: float) -> DensityOperator:
    """Pure-loss channel of transmission eta on one mode; trace preserving."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidEta(f"Transmission must lie in [0, 1], got {eta}")
    if isinstance(rho, FockState):
        raise ShapeMismatch("apply_loss needs a DensityOperator")
    _check_modes(rho, [mode])
    if eta == 1.0:
        return rho
    m = rho.mode_count
    kraus = gate_cache.get_or_build(("loss", parameter_key(eta), rho.cutoff), lambda: loss_kraus(eta, rho.cutoff))
    tensor = rho.tensor
    out = np.zeros_like(tensor)
    for k_op in kraus:
        if not k_op.any():
            continue
        term = _apply_single(tensor, k_op, mode)
        out += _apply_single(term, k_op, mode + m)
    dim = rho.cutoff ** m
    matrix = out.reshape(dim, dim)
    matrix = 0.5 * (matrix + matrix.conj().T)
    return DensityOperator(mode_count=m, cutoff=rho.cutoff, matrix=matrix, trace_weight=rho.trace_weight)


# ============ LADDER OPERATIONS ============


def _ladder(state: FockState, mode: int, raising: bool) -> Tuple[np.ndarray, float]:
    a = annihilation_matrix(state.cutoff)
    op = a.conj().T if raising else a
    out = _apply_single(state.tensor, op, mode)
    return out, float(np.vdot(out, out).real)


def photon_add(state: FockState, mode: int, tolerance: Optional[float] = None) -> Tuple[FockState, float]:
    """Apply a^dag; return the normalized image and its squared norm."""
    _check_modes(state, [mode])
    top = populations(state, mode)[-1]
    check_leakage(float(top), tolerance, "photon_add")
    out, weight = _ladder(state, mode, raising=True)
    if weight <= 1e-300:
        raise ZeroNormError("Photon addition produced a zero vector")
    new_state = FockState(
        mode_count=state.mode_count, cutoff=state.cutoff, amplitudes=out / np.sqrt(weight), norm_weight=state.norm_weight
    )
    return new_state, weight


def photon_subtract(state: FockState, mode: int) -> Tuple[FockState, float]:
    """Apply a; return the normalized image and its squared norm (<n>)."""
    _check_modes(state, [mode])
    out, weight = _ladder(state, mode, raising=False)
    if weight <= 1e-14:
        raise ZeroNormError(f"Photon subtraction on mode {mode} with no photons")
    new_state = FockState(
        mode_count=state.mode_count, cutoff=state.cutoff, amplitudes=out / np.sqrt(weight), norm_weight=state.norm_weight
    )
    return new_state, weight


# ============ REDUCTIONS & DIAGNOSTICS ============


def partial_trace(state: State, keep: Sequence[int]) -> DensityOperator:
    """Reduced density operator on the modes in ``keep`` (in the given order)."""
    keep = list(keep)
    _check_modes(state, keep)
    m, d = state.mode_count, state.cutoff
    traced = [k for k in range(m) if k not in keep]
    dk, dr = d ** len(keep), d ** len(traced)
    if isinstance(state, FockState):
        psi = np.transpose(state.tensor, keep + traced).reshape(dk, dr)
        matrix = psi @ psi.conj().T
        weight = state.norm_weight
    else:
        perm = keep + traced + [m + k for k in keep] + [m + k for k in traced]
        t = np.transpose(state.tensor, perm).reshape(dk, dr, dk, dr)
        matrix = np.einsum("ajbj->ab", t)
        weight = state.trace_weight
    matrix = 0.5 * (matrix + matrix.conj().T)
    return DensityOperator(mode_count=len(keep), cutoff=d, matrix=matrix, trace_weight=weight)


def populations(state: State, mode: int) -> np.ndarray:
    """Photon-number distribution of one mode."""
    _check_modes(state, [mode])
    if isinstance(state, FockState):
        probs = np.abs(state.tensor) ** 2
        axes = tuple(k for k in range(state.mode_count) if k != mode)
        return probs.sum(axis=axes) if axes else probs
    return np.diag(partial_trace(state, [mode]).matrix).real.copy()


def photon_number_mean(state: State, mode: int) -> float:
    probs = populations(state, mode)
    return float(np.dot(np.arange(probs.size), probs))


def parity_expectation(state: State, mode: int = 0) -> float:
    """<(-1)^n> on one mode."""
    probs = populations(state, mode)
    return float(np.dot((-1.0) ** np.arange(probs.size), probs))


def truncation_report(state: State) -> TruncationReport:
    """Population of the top Fock level (and top two levels) per mode."""
    top, edge = [], []
    for mode in range(state.mode_count):
        probs = populations(state, mode)
        top.append(float(probs[-1]))
        edge.append(float(probs[-2:].sum()))
    return TruncationReport(
        cutoff=state.cutoff,
        top_level=top,
        edge=edge,
        max_top_level=max(top, default=0.0),
        max_edge=max(edge, default=0.0),
    )


# ============ FIDELITY ============


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(a: State, b: State) -> float:
    """Uhlmann fidelity; |<a|b>|^2 for two pure states."""
    if a.mode_count != b.mode_count or a.cutoff != b.cutoff:
        raise ShapeMismatch(
            f"Fidelity operands differ: ({a.mode_count} modes, d={a.cutoff}) vs ({b.mode_count} modes, d={b.cutoff})"
        )
    if isinstance(a, FockState) and isinstance(b, FockState):
        value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    elif isinstance(a, FockState):
        value = np.vdot(a.amplitudes, b.matrix @ a.amplitudes).real
    elif isinstance(b, FockState):
        value = np.vdot(b.amplitudes, a.matrix @ b.amplitudes).real
    else:
        singular = svdvals(_psd_sqrt(a.matrix) @ _psd_sqrt(b.matrix))
        value = float(np.sum(singular)) ** 2
    return float(min(1.0, max(0.0, value)))


def _total_photons(mode_count: int, cutoff: int) -> np.ndarray:
    grids = np.indices((cutoff,) * mode_count)
    return grids.sum(axis=0).reshape(-1)


def subspace_fidelity(a: State, b: State, max_photons: int) -> float:
    """Fidelity after projecting both states onto total photon number <= max_photons."""
    mask = _total_photons(a.mode_count, a.cutoff) <= max_photons

    def project(state: State) -> State:
        if isinstance(state, FockState):
            return normalized(np.where(mask, state.amplitudes, 0.0), state.mode_count, state.cutoff)
        matrix = state.matrix * np.outer(mask, mask)
        trace = float(np.trace(matrix).real)
        if trace <= 1e-300:
            raise ZeroNormError("State has no weight in the low-photon subspace")
        return DensityOperator(mode_count=state.mode_count, cutoff=state.cutoff, matrix=matrix / trace)

    return fidelity(project(a), project(b))


# ============ PROGRAM EXECUTION ============


def run_program(program: CircuitProgram, state: State, tolerance: Optional[float] = None) -> State:
    """
    Execute a circuit program directly on the Fock engine.

    Pure inputs are promoted to density operators when the program contains
    Loss. Measurement events project on their fixed outcome and reset the bin.
    """
    if state.mode_count != program.mode_count:
        raise ShapeMismatch(
            f"Program acts on {program.mode_count} modes, state has {state.mode_count}"
        )
    if program.has_loss and isinstance(state, FockState):
        state = to_density(state)
    for op in program.ops:
        if op.is_measurement:
            from src.engines.measurement import project_and_reset

            state = project_and_reset(state, op)
        else:
            state = apply_gate(state, op, tolerance=tolerance)
    logger.debug("Executed %d-event program on %d modes", len(program), program.mode_count)
    return state
