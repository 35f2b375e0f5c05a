"""
State Data Models

Pydantic models for the three state carriers: pure Fock states, density
operators in the same truncated basis, and Gaussian (mean, covariance) states.

Amplitude layout: the flat amplitude vector is the C-order ravel of a tensor
with one axis per mode, mode 0 slowest-varying. Quadrature ordering for
Gaussian states is xxpp: (x_1..x_m, p_1..p_m).
"""

from typing import Any, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import sparse

from fockloop_core import ShapeMismatch, ZeroNormError

NORM_TOL = 1e-10
TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-10
EIGEN_TOL = 1e-9
# Eigenvalue and symplectic positivity checks are skipped above these sizes.
EIGEN_CHECK_MAX_DIM = 1024
GAUSSIAN_CHECK_MAX_MODES = 64


class FockState(BaseModel):
    """Pure state over m modes truncated at cutoff d."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mode_count: int = Field(..., ge=0, description="Number of modes (0 once every mode was measured)")
    cutoff: int = Field(..., ge=2, description="Fock levels 0..d-1 kept per mode")
    amplitudes: np.ndarray = Field(..., description="Complex amplitudes, length d**mode_count")
    norm_weight: float = Field(default=1.0, ge=0.0, description="Accumulated conditioning probability")

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_complex_vector(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=complex).reshape(-1)

    @model_validator(mode="after")
    def _check_invariants(self) -> "FockState":
        expected = self.cutoff ** self.mode_count
        if self.amplitudes.size != expected:
            raise ShapeMismatch(
                f"Amplitude length {self.amplitudes.size} != cutoff**mode_count = {expected}"
            )
        norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ZeroNormError(f"FockState amplitudes must be normalized (norm {norm:.12f})")
        return self

    @property
    def tensor(self) -> np.ndarray:
        """Amplitudes as a (d, d, ..., d) tensor."""
        return self.amplitudes.reshape((self.cutoff,) * self.mode_count)

    def to_json_dict(self) -> dict:
        """Snapshot with amplitudes as [re, im] pairs in declared index order."""
        return {
            "mode_count": self.mode_count,
            "cutoff": self.cutoff,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
            "norm_weight": float(self.norm_weight),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "FockState":
        pairs = np.asarray(data["amplitudes"], dtype=float).reshape(-1, 2)
        return cls(
            mode_count=data["mode_count"],
            cutoff=data["cutoff"],
            amplitudes=pairs[:, 0] + 1j * pairs[:, 1],
            norm_weight=data.get("norm_weight", 1.0),
        )


class DensityOperator(BaseModel):
    """Mixed state in the same truncated multimode basis as FockState."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mode_count: int = Field(..., ge=0, description="Number of modes")
    cutoff: int = Field(..., ge=2, description="Fock levels 0..d-1 kept per mode")
    matrix: np.ndarray = Field(..., description="Complex d**m x d**m density matrix")
    trace_weight: float = Field(default=1.0, ge=0.0, description="Accumulated conditioning probability")

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_complex_matrix(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=complex)

    @model_validator(mode="after")
    def _check_invariants(self) -> "DensityOperator":
        dim = self.cutoff ** self.mode_count
        if self.matrix.shape != (dim, dim):
            raise ShapeMismatch(f"Density matrix shape {self.matrix.shape} != ({dim}, {dim})")
        if np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ShapeMismatch("Density matrix is not Hermitian")
        trace = float(np.trace(self.matrix).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise ZeroNormError(f"Density matrix trace must be 1 (got {trace:.12f})")
        if dim <= EIGEN_CHECK_MAX_DIM:
            smallest = float(np.linalg.eigvalsh(self.matrix)[0])
            if smallest < -EIGEN_TOL:
                raise ShapeMismatch(f"Density matrix has negative eigenvalue {smallest:.3e}")
        return self

    @property
    def tensor(self) -> np.ndarray:
        """Matrix as a tensor with ket axes first, then bra axes."""
        return self.matrix.reshape((self.cutoff,) * (2 * self.mode_count))

    def to_json_dict(self) -> dict:
        return {
            "mode_count": self.mode_count,
            "cutoff": self.cutoff,
            "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix],
            "trace_weight": float(self.trace_weight),
        }


CovarianceMatrix = Union[np.ndarray, sparse.spmatrix, sparse.sparray]


def symplectic_form(mode_count: int) -> np.ndarray:
    """Standard symplectic form Omega in xxpp ordering."""
    eye = np.eye(mode_count)
    zero = np.zeros((mode_count, mode_count))
    return np.block([[zero, eye], [-eye, zero]])


class GaussianState(BaseModel):
    """Gaussian state: mean vector and covariance in xxpp ordering (vacuum cov = I/2)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mode_count: int = Field(..., ge=1, description="Number of modes m")
    mean: np.ndarray = Field(..., description="Real mean vector, length 2m")
    cov: Any = Field(..., description="Real 2m x 2m covariance, dense or scipy.sparse")

    @field_validator("mean", mode="before")
    @classmethod
    def _as_real_vector(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=float).reshape(-1)

    @model_validator(mode="after")
    def _check_invariants(self) -> "GaussianState":
        n = 2 * self.mode_count
        if self.mean.shape != (n,):
            raise ShapeMismatch(f"Mean length {self.mean.size} != 2m = {n}")
        if self.cov.shape != (n, n):
            raise ShapeMismatch(f"Covariance shape {self.cov.shape} != ({n}, {n})")
        if sparse.issparse(self.cov):
            asym = abs(self.cov - self.cov.T)
            if asym.nnz and asym.max() > 1e-10:
                raise ShapeMismatch("Covariance matrix is not symmetric")
            return self
        cov = np.asarray(self.cov, dtype=float)
        if np.max(np.abs(cov - cov.T)) > 1e-10:
            raise ShapeMismatch("Covariance matrix is not symmetric")
        if self.mode_count <= GAUSSIAN_CHECK_MAX_MODES:
            uncertainty = cov + 0.5j * symplectic_form(self.mode_count)
            smallest = float(np.linalg.eigvalsh(uncertainty)[0])
            if smallest < -1e-8:
                raise ShapeMismatch(f"Covariance violates the uncertainty principle ({smallest:.3e})")
        return self

    @property
    def dense_cov(self) -> np.ndarray:
        return self.cov.toarray() if sparse.issparse(self.cov) else np.asarray(self.cov)

    def quadrature_indices(self, modes: List[int]) -> np.ndarray:
        """xxpp indices of the given modes (x block then p block)."""
        modes = list(modes)
        return np.array(modes + [self.mode_count + k for k in modes], dtype=int)


class Nullifier(BaseModel):
    """Real linear form over quadratures, stored sparsely."""

    model_config = ConfigDict(frozen=True)

    dimension: int = Field(..., ge=2, description="Length 2m of the coefficient vector")
    indices: Tuple[int, ...] = Field(..., description="Nonzero coefficient positions")
    weights: Tuple[float, ...] = Field(..., description="Nonzero coefficient values")
    label: str = Field(default="", description="Canonical label, e.g. 'x[3]' or 'p[3]'")

    @model_validator(mode="after")
    def _check_nonzero(self) -> "Nullifier":
        if len(self.indices) != len(self.weights):
            raise ShapeMismatch("Nullifier indices and weights differ in length")
        if not any(abs(w) > 0 for w in self.weights):
            raise ShapeMismatch("Nullifier coefficient vector must be nonzero")
        if any(i < 0 or i >= self.dimension for i in self.indices):
            raise ShapeMismatch("Nullifier index out of range")
        return self

    def dense(self) -> np.ndarray:
        vec = np.zeros(self.dimension)
        np.add.at(vec, np.array(self.indices, dtype=int), np.array(self.weights))
        return vec

    def sparse_vector(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            (np.array(self.weights), (np.zeros(len(self.indices), dtype=int), np.array(self.indices))),
            shape=(1, self.dimension),
        )

    @classmethod
    def from_dense(cls, vector: np.ndarray, label: str = "", tol: float = 1e-15) -> "Nullifier":
        vector = np.asarray(vector, dtype=float)
        idx = np.flatnonzero(np.abs(vector) > tol)
        return cls(
            dimension=vector.size,
            indices=tuple(int(i) for i in idx),
            weights=tuple(float(vector[i]) for i in idx),
            label=label,
        )
