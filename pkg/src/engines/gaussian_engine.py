"""
Gaussian Engine

Covariance-matrix simulation of Gaussian circuits in xxpp ordering with vacuum
covariance I/2 (hbar = 1). Covers the time-multiplexed EPR chain and its
nullifiers, plus desk-scale Gaussian boson sampling through hafnians.

Long chains keep their covariance as a scipy.sparse matrix; every gate is
local, so the symplectic of a layer stays sparse.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.special import factorial
from thewalrus import hafnian as walrus_hafnian
from thewalrus.quantum import Amat, Qmat, reduced_gaussian

from src.models.circuit_model import BeamSplitter, CircuitProgram, Displace, Loss, Phase, Squeeze
from src.models.state_models import GaussianState, Nullifier, symplectic_form
from fockloop_core import InvalidMode, NonGaussianOp, NonSymmetric, NonZeroMean, ScaleExceeded, ShapeMismatch

logger = logging.getLogger(__name__)

HBAR = 1.0
MAX_SAMPLER_MODES = 8
MAX_PATTERN_PHOTONS = 24
SAMPLE_CUTOFF = 8
SYMMETRY_TOL = 1e-10

# ============ STATES ============


def vacuum_state(mode_count: int) -> GaussianState:
    """Vacuum: mean 0, covariance I/2."""
    n = 2 * mode_count
    return GaussianState(mode_count=mode_count, mean=np.zeros(n), cov=0.5 * np.eye(n))


def squeezed_vacuum(rs: Sequence[float], phis: Optional[Sequence[float]] = None) -> GaussianState:
    """Product of single-mode squeezed vacua S(r_k, phi_k)|0>."""
    phis = [0.0] * len(rs) if phis is None else list(phis)
    state = vacuum_state(len(rs))
    for mode, (r, phi) in enumerate(zip(rs, phis)):
        state = apply_symplectic(state, Squeeze(mode=mode, r=r, phi=phi))
    return state


# ============ SYMPLECTICS ============


def _local_block(op) -> Tuple[List[int], np.ndarray]:
    """(modes, xxpp block) of a Gaussian unitary acting on one or two modes."""
    if isinstance(op, Squeeze):
        ch, sh = np.cosh(op.r), np.sinh(op.r)
        c2, s2 = np.cos(2 * op.phi), np.sin(2 * op.phi)
        return [op.mode], np.array([[ch - sh * c2, -sh * s2], [-sh * s2, ch + sh * c2]])
    if isinstance(op, Phase):
        c, s = np.cos(op.phi), np.sin(op.phi)
        return [op.mode], np.array([[c, -s], [s, c]])
    if isinstance(op, Displace):
        return [op.mode], np.eye(2)
    if isinstance(op, BeamSplitter):
        c, s = np.cos(op.theta), np.sin(op.theta)
        # Heisenberg map a_i -> c a_i + e^{i phi} s a_j, a_j -> c a_j - e^{-i phi} s a_i
        u = np.array([[c, np.exp(1j * op.phi) * s], [-np.exp(-1j * op.phi) * s, c]])
        return [op.mode_i, op.mode_j], np.block([[u.real, -u.imag], [u.imag, u.real]])
    raise NonGaussianOp(f"{op.kind} is not a Gaussian unitary")


def _embed_indices(modes: List[int], mode_count: int) -> np.ndarray:
    return np.array(list(modes) + [mode_count + k for k in modes], dtype=int)


def symplectic_matrix(op, mode_count: int, as_sparse: bool = False):
    """Full 2m x 2m symplectic of a Gaussian unitary."""
    modes, block = _local_block(op)
    for mode in modes:
        if mode >= mode_count:
            raise InvalidMode(f"Mode {mode} out of range for {mode_count}-mode state")
    idx = _embed_indices(modes, mode_count)
    if as_sparse:
        matrix = sparse.identity(2 * mode_count, format="lil")
        for a, row in enumerate(idx):
            for b, col in enumerate(idx):
                matrix[row, col] = block[a, b]
        return matrix.tocsr()
    matrix = np.eye(2 * mode_count)
    matrix[np.ix_(idx, idx)] = block
    return matrix


def is_symplectic(matrix: np.ndarray, tol: float = 1e-10) -> bool:
    """S Omega S^T = Omega and det S = 1."""
    matrix = np.asarray(matrix)
    omega = symplectic_form(matrix.shape[0] // 2)
    return bool(
        np.allclose(matrix @ omega @ matrix.T, omega, atol=tol) and abs(np.linalg.det(matrix) - 1.0) < tol
    )


def purity(state: GaussianState) -> float:
    """Tr rho^2 = 1 / sqrt(det(2 cov))."""
    return float(1.0 / np.sqrt(np.linalg.det(2.0 * state.dense_cov)))


def apply_symplectic(state: GaussianState, op) -> GaussianState:
    """
    Apply a Gaussian gate (Squeeze, BeamSplitter, Phase, Displace or Loss).

    Raises:
        NonGaussianOp: for Kerr gates and measurement events.
    """
    for mode in op.modes:
        if mode >= state.mode_count:
            raise InvalidMode(f"Mode {mode} out of range for {state.mode_count}-mode state")
    m = state.mode_count
    mean = state.mean.copy()

    if isinstance(op, Loss):
        idx = _embed_indices([op.mode], m)
        scale = np.ones(2 * m)
        scale[idx] = np.sqrt(op.eta)
        added = np.zeros(2 * m)
        added[idx] = 0.5 * (1.0 - op.eta)
        if sparse.issparse(state.cov):
            x = sparse.diags(scale)
            cov = (x @ state.cov @ x + sparse.diags(added)).tocsr()
        else:
            cov = scale[:, None] * state.cov * scale[None, :] + np.diag(added)
        return GaussianState(mode_count=m, mean=mean * scale, cov=cov)

    modes, block = _local_block(op)
    idx = _embed_indices(modes, m)
    if sparse.issparse(state.cov):
        s = symplectic_matrix(op, m, as_sparse=True)
        cov = (s @ state.cov @ s.T).tocsr()
    else:
        cov = np.array(state.cov, dtype=float)
        cov[idx, :] = block @ cov[idx, :]
        cov[:, idx] = cov[:, idx] @ block.T
    mean[idx] = block @ mean[idx]
    if isinstance(op, Displace):
        mean[op.mode] += np.sqrt(2.0) * op.beta.real
        mean[m + op.mode] += np.sqrt(2.0) * op.beta.imag
    return GaussianState(mode_count=m, mean=mean, cov=cov)


def run_gaussian_program(program: CircuitProgram, state: Optional[GaussianState] = None) -> GaussianState:
    """Evolve a Gaussian-only program; starts from vacuum when no state is given."""
    state = vacuum_state(program.mode_count) if state is None else state
    for op in program.ops:
        if not op.is_gaussian or op.is_measurement:
            raise NonGaussianOp(f"Covariance engine cannot apply {op.kind}")
        state = apply_symplectic(state, op)
    return state


# ============ EPR CHAIN & NULLIFIERS ============


def _layer(ops, mode_count: int) -> sparse.csr_matrix:
    """Sparse symplectic of commuting gates on disjoint modes."""
    layer = sparse.identity(2 * mode_count, format="lil")
    for op in ops:
        modes, block = _local_block(op)
        idx = _embed_indices(modes, mode_count)
        for a, row in enumerate(idx):
            for b, col in enumerate(idx):
                layer[row, col] = block[a, b]
    return layer.tocsr()


def epr_chain_generate(n_bins: int, r: float) -> Tuple[GaussianState, List[Nullifier]]:
    """
    Two-rail time-multiplexed EPR chain.

    Rail A holds modes 0..n-1 and rail B modes n..2n-1. A_k is squeezed in x
    and B_k in p; each (A_k, B_k) pair meets on a 50:50 beamsplitter, rail B is
    delayed by one bin, and A_k meets B_{k-1} on a second 50:50 beamsplitter.

    Returns the state and, per bin, the x-type and p-type nullifiers
    labelled 'x[k]' and 'p[k]'.
    """
    if n_bins < 2:
        raise ShapeMismatch("EPR chain needs at least two bins")
    m = 2 * n_bins
    squeezed = np.exp(-2.0 * r) / 2.0
    anti = np.exp(2.0 * r) / 2.0
    diag = np.empty(2 * m)
    diag[:n_bins] = squeezed  # x of rail A
    diag[n_bins:m] = anti  # x of rail B
    diag[m:m + n_bins] = anti  # p of rail A
    diag[m + n_bins:] = squeezed  # p of rail B
    cov_in = sparse.diags(diag, format="csr")

    half = np.pi / 4
    first = _layer([BeamSplitter(mode_i=k, mode_j=n_bins + k, theta=half) for k in range(n_bins)], m)
    second = _layer([BeamSplitter(mode_i=k, mode_j=n_bins + k - 1, theta=half) for k in range(1, n_bins)], m)
    total = (second @ first).tocsr()
    cov = (total @ cov_in @ total.T).tocsr()
    cov.eliminate_zeros()
    state = GaussianState(mode_count=m, mean=np.zeros(2 * m), cov=cov)

    # Rows 2k and 2k+1: (x_Ak - x_Bk)/sqrt2 and (p_Ak + p_Bk)/sqrt2 after the first layer.
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    ks = np.arange(n_bins)
    rows = np.repeat(np.arange(2 * n_bins), 2)
    cols = np.column_stack([ks, n_bins + ks, m + ks, m + n_bins + ks]).reshape(-1)
    vals = np.tile([inv_sqrt2, -inv_sqrt2, inv_sqrt2, inv_sqrt2], n_bins)
    forms_in = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * n_bins, 2 * m))
    # second layer is orthogonal, so forms transform with S itself
    forms_out = (forms_in @ second.T).tocsr()
    forms_out.eliminate_zeros()

    nullifiers: List[Nullifier] = []
    for row in range(2 * n_bins):
        start, stop = forms_out.indptr[row], forms_out.indptr[row + 1]
        label = f"{'x' if row % 2 == 0 else 'p'}[{row // 2}]"
        nullifiers.append(
            Nullifier(
                dimension=2 * m,
                indices=tuple(int(i) for i in forms_out.indices[start:stop]),
                weights=tuple(float(w) for w in forms_out.data[start:stop]),
                label=label,
            )
        )
    logger.debug("Built %d-bin EPR chain at r=%.4f", n_bins, r)
    return state, nullifiers


def nullifier_matrix(nullifiers: Sequence[Nullifier]) -> sparse.csr_matrix:
    """Stack nullifier forms as rows of a sparse matrix."""
    rows, cols, vals = [], [], []
    for row, nf in enumerate(nullifiers):
        rows.extend([row] * len(nf.indices))
        cols.extend(nf.indices)
        vals.extend(nf.weights)
    dimension = nullifiers[0].dimension if nullifiers else 0
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(nullifiers), dimension))


def nullifier_variance(state: GaussianState, nf: Nullifier) -> Tuple[float, float]:
    """Variance c^T cov c and its ratio to the vacuum variance |c|^2/2 in dB."""
    if nf.dimension != 2 * state.mode_count:
        raise ShapeMismatch(f"Nullifier length {nf.dimension} != 2m = {2 * state.mode_count}")
    idx = np.array(nf.indices, dtype=int)
    weights = np.array(nf.weights)
    if sparse.issparse(state.cov):
        block = state.cov[idx][:, idx].toarray()
    else:
        block = np.asarray(state.cov)[np.ix_(idx, idx)]
    variance = float(weights @ block @ weights)
    vacuum = 0.5 * float(weights @ weights)
    return variance, float(10.0 * np.log10(variance / vacuum))


def nullifier_sweep(n_bins: int, r: float) -> List[dict]:
    """Per-bin rows {bin_index, x_variance_db, p_variance_db} for an EPR chain."""
    state, nullifiers = epr_chain_generate(n_bins, r)
    forms = nullifier_matrix(nullifiers)
    variances = np.asarray((forms @ state.cov).multiply(forms).sum(axis=1)).reshape(-1)
    vacuum = 0.5 * np.asarray(forms.multiply(forms).sum(axis=1)).reshape(-1)
    db = 10.0 * np.log10(variances / vacuum)
    rows = [
        {"bin_index": k, "x_variance_db": float(db[2 * k]), "p_variance_db": float(db[2 * k + 1])}
        for k in range(n_bins)
    ]
    logger.info("Nullifier sweep over %d bins at r=%.4f", n_bins, r)
    return rows


# ============ BOSON SAMPLING ============


def hafnian(matrix: np.ndarray) -> complex:
    """
    Hafnian of a symmetric matrix; 1 for the empty matrix, 0 for odd sizes.

    Raises:
        NonSymmetric: if the matrix is not symmetric.
    """
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ShapeMismatch(f"Hafnian needs a square matrix, got {matrix.shape}")
    if n and np.max(np.abs(matrix - matrix.T)) > SYMMETRY_TOL:
        raise NonSymmetric("Hafnian argument is not symmetric")
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        return 0.0 + 0.0j
    return complex(walrus_hafnian(matrix))


def _require_zero_mean(state: GaussianState) -> None:
    if np.max(np.abs(state.mean), initial=0.0) > 1e-12:
        raise NonZeroMean("Boson-sampling probabilities need a zero-mean state")


def gbs_probability(state: GaussianState, pattern: Sequence[int]) -> float:
    """
    P(n) = haf(A_n) / (prod n_k! sqrt(det Q)) for a zero-mean Gaussian state.

    A_n repeats row/column k (and its conjugate partner k + m) n_k times.
    """
    _require_zero_mean(state)
    pattern = np.asarray(pattern, dtype=int)
    if pattern.size != state.mode_count or np.any(pattern < 0):
        raise ShapeMismatch(f"Pattern {tuple(pattern)} does not fit {state.mode_count} modes")
    if pattern.sum() > MAX_PATTERN_PHOTONS:
        raise ScaleExceeded(f"Pattern with {pattern.sum()} photons exceeds desk scale")
    cov = state.dense_cov
    q = Qmat(cov, hbar=HBAR)
    prefactor = 1.0 / np.sqrt(np.linalg.det(q).real)
    if pattern.sum() == 0:
        return float(prefactor)
    if pattern.sum() % 2:
        return 0.0
    a = Amat(cov, hbar=HBAR)
    reps = np.concatenate([pattern, pattern])
    idx = np.repeat(np.arange(2 * state.mode_count), reps)
    value = hafnian(a[np.ix_(idx, idx)]).real
    return float(max(0.0, value * prefactor / np.prod(factorial(pattern))))


def gbs_sample(
    state: GaussianState, n_samples: int, rng: np.random.Generator, cutoff: int = SAMPLE_CUTOFF
) -> List[Tuple[int, ...]]:
    """
    Chain-rule sampler: draw n_0 from the one-mode marginal, then n_k given
    n_0..n_{k-1} from the reduced state on modes 0..k. Counts are bounded by
    ``cutoff`` and each conditional is renormalized over 0..cutoff-1.
    """
    _require_zero_mean(state)
    m = state.mode_count
    if m > MAX_SAMPLER_MODES:
        raise ScaleExceeded(f"Sampler is limited to {MAX_SAMPLER_MODES} modes, got {m}")
    mean, cov = np.zeros(2 * m), state.dense_cov
    reduced = []
    for k in range(m):
        mu_k, cov_k = reduced_gaussian(mean, cov, list(range(k + 1)))
        reduced.append(GaussianState(mode_count=k + 1, mean=mu_k, cov=cov_k))

    memo: Dict[Tuple[int, ...], float] = {}

    def prob(prefix: Tuple[int, ...]) -> float:
        if prefix not in memo:
            memo[prefix] = gbs_probability(reduced[len(prefix) - 1], prefix)
        return memo[prefix]

    samples = []
    for _ in range(n_samples):
        prefix: Tuple[int, ...] = ()
        for _k in range(m):
            weights = np.array([prob(prefix + (j,)) for j in range(cutoff)])
            total = weights.sum()
            if total <= 0.0:
                prefix = prefix + (0,)
                continue
            prefix = prefix + (int(rng.choice(cutoff, p=weights / total)),)
        samples.append(prefix)
    return samples


def pattern_fidelity(p: Dict[Tuple[int, ...], float], q: Dict[Tuple[int, ...], float]) -> float:
    """Classical fidelity (sum sqrt(p q))^2 between two pattern distributions."""
    keys = set(p) | set(q)
    overlap = sum(np.sqrt(max(p.get(k, 0.0), 0.0) * max(q.get(k, 0.0), 0.0)) for k in keys)
    return float(min(1.0, overlap ** 2))


def empirical_distribution(samples: Sequence[Tuple[int, ...]]) -> Dict[Tuple[int, ...], float]:
    counts: Dict[Tuple[int, ...], float] = {}
    for s in samples:
        counts[tuple(s)] = counts.get(tuple(s), 0.0) + 1.0
    n = float(len(samples))
    return {k: v / n for k, v in counts.items()} if n else {}
