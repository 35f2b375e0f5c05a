"""
Experiment Data Models

Configuration models for the protocol drivers, the Bose-Hubbard lattice, the
loop machine and the experiment manifests read by the CLI.
"""

import math
from typing import Any, Dict, FrozenSet, List, Literal, Optional, Tuple, Type

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from fockloop_core import ManifestError

MAX_BREEDING_ROUNDS = 4
MAX_SEED = 2 ** 64 - 1

# Experimental comparison values for the grid-state run; annotations only.
GKP_REFERENCE = {"s_x": 0.1061, "s_logical": 0.2065, "var_x_peak": 0.1493, "var_p_peak": 0.0870, "var_product": 0.0130}


class BreedingConfig(BaseModel):
    """Parameters of a cat-breeding tree."""

    model_config = ConfigDict(frozen=True)

    r_initial: float = Field(default=0.48, ge=0.0, description="Inline squeezing applied to each single photon")
    n_rounds: int = Field(default=2, ge=0, le=MAX_BREEDING_ROUNDS, description="Breeding rounds (2**n leaves)")
    feed_forward: bool = Field(default=True, description="Apply the corrective p displacement after each round")
    feed_forward_gain: float = Field(default=1.0, description="Scale of the corrective displacement")
    accept_window: Optional[float] = Field(default=None, gt=0.0, description="Accept |outcome| < w")
    filter_target: Literal["ancilla", "output"] = Field(
        default="ancilla", description="Apply the acceptance window to ancilla outcomes or output x samples"
    )
    herald_eta: float = Field(default=1.0, ge=0.0, le=1.0, description="Heralded single-photon efficiency")
    loss_eta_per_step: float = Field(default=1.0, ge=0.0, le=1.0, description="Transmission per breeding round")

    @property
    def lossless(self) -> bool:
        return self.herald_eta == 1.0 and self.loss_eta_per_step == 1.0


class LatticeSpec(BaseModel):
    """Bose-Hubbard chain: H = -J sum (a_i^dag a_j + h.c.) + (U/2) sum n_i (n_i - 1)."""

    model_config = ConfigDict(frozen=True)

    n_sites: int = Field(..., ge=2, description="Number of lattice sites")
    J: float = Field(default=1.0, ge=0.0, description="Uniform nearest-neighbour hopping")
    U: float = Field(default=1.0, description="On-site interaction")
    boundary: Literal["open", "periodic"] = Field(default="open", description="Chain boundary condition")
    t: float = Field(default=0.5, ge=0.0, description="Evolution time (hbar = 1)")
    splitting: Literal["first_order", "symmetric"] = Field(default="first_order", description="Trotter splitting")
    bond_hopping: Optional[List[float]] = Field(default=None, description="Per-bond J overriding the uniform value")

    @model_validator(mode="after")
    def _check_bonds(self) -> "LatticeSpec":
        if self.bond_hopping is not None and len(self.bond_hopping) != len(self.bonds):
            raise ValueError(f"bond_hopping needs {len(self.bonds)} entries, got {len(self.bond_hopping)}")
        return self

    @property
    def bonds(self) -> List[Tuple[int, int]]:
        bonds = [(i, i + 1) for i in range(self.n_sites - 1)]
        if self.boundary == "periodic" and self.n_sites > 2:
            bonds.append((self.n_sites - 1, 0))
        return bonds

    def hopping(self, bond_index: int) -> float:
        if self.bond_hopping is None:
            return self.J
        return self.bond_hopping[bond_index]

    def with_updates(self, **changes) -> "LatticeSpec":
        return LatticeSpec(**{**self.model_dump(), **changes})


ModuleKind = Literal["squeezer", "kerr", "homodyne", "pnrd", "source"]


class MachineSpec(BaseModel):
    """Time-bin loop machine: interferometer cores, delay lines and plug-in modules."""

    model_config = ConfigDict(frozen=True)

    n_cores: int = Field(default=1, ge=1, description="Interferometer cores in the linear unit")
    delay_bins: FrozenSet[int] = Field(default=frozenset({1}), description="Available delay lengths in bins")
    modules: FrozenSet[ModuleKind] = Field(
        default=frozenset({"squeezer", "kerr", "homodyne", "pnrd", "source"}),
        description="Plug-in modules docked on the optical path",
    )
    n_bins: int = Field(default=64, ge=1, description="Time bins available per pass")

    @field_validator("delay_bins")
    @classmethod
    def _positive_delays(cls, value: FrozenSet[int]) -> FrozenSet[int]:
        if any(d <= 0 for d in value):
            raise ValueError("delay lengths must be positive")
        return value


# ============ EXPERIMENT PARAMETER BLOCKS ============


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class KerrDemoParams(_Params):
    alpha: float = Field(default=0.5, description="Coherent amplitude fed to the Kerr gate")
    phi: float = Field(default=math.pi / 3, description="Kerr phase Phi")
    loss_etas: List[float] = Field(default=[1.0, 0.95, 0.9, 0.85, 0.8], description="Output transmissions to compare")
    grid_half_width: float = Field(default=6.0, gt=0.0, description="Wigner grid half-width")
    grid_points: int = Field(default=201, ge=11, description="Wigner grid points per axis")


class CatBreedParams(_Params):
    r: float = Field(default=0.3, ge=0.0, description="Inline squeezing of the single photon")
    n_rounds: int = Field(default=2, ge=0, le=MAX_BREEDING_ROUNDS, description="Zero-outcome breeding rounds")
    grid_half_width: float = Field(default=6.0, gt=0.0)
    grid_points: int = Field(default=201, ge=11)


class CompassParams(_Params):
    r: float = Field(default=0.6, ge=0.0, description="Inline squeezing of each cat")
    herald_n: int = Field(default=2, ge=0, description="PNRD count heralding the compass")
    grid_half_width: float = Field(default=6.0, gt=0.0)
    grid_points: int = Field(default=201, ge=11)


class GkpParams(BreedingConfig):
    model_config = ConfigDict(extra="forbid", frozen=True)

    accept_window: Optional[float] = Field(default=0.75, gt=0.0, description="Accept |outcome| < w")
    n_trajectories: int = Field(default=1000, ge=1, description="Monte-Carlo breeding trees")
    marginal_half_width: float = Field(default=8.0, gt=0.0)
    marginal_points: int = Field(default=801, ge=11)


class BoseHubbardSweepParams(_Params):
    n_sites: int = Field(default=3, ge=2)
    J: float = Field(default=1.0, ge=0.0)
    u_over_j: List[float] = Field(default=[0.5, 1.0, 1.5, 2.0, 2.5, 3.0], min_length=1)
    t: float = Field(default=0.5, ge=0.0)
    initial_states: List[Tuple[int, ...]] = Field(default=[(2, 0, 0), (1, 1, 0)], min_length=1)
    n_steps: int = Field(default=400, ge=1)
    splitting: Literal["first_order", "symmetric"] = Field(default="symmetric")
    boundary: Literal["open", "periodic"] = Field(default="open")


class BoseHubbardTimeseriesParams(_Params):
    n_sites: int = Field(default=3, ge=2)
    J: float = Field(default=1.0, ge=0.0)
    u_over_j: float = Field(default=1.0)
    t_grid: List[float] = Field(default=[0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5], min_length=1)
    initial_states: List[Tuple[int, ...]] = Field(default=[(2, 0, 0), (1, 1, 0)], min_length=1)
    n_steps: int = Field(default=400, ge=1)
    splitting: Literal["first_order", "symmetric"] = Field(default="symmetric")
    boundary: Literal["open", "periodic"] = Field(default="open")


class ClusterNullifierParams(_Params):
    n_bins: int = Field(default=8000, ge=2, description="Time bins per rail")
    r: float = Field(default=0.4, ge=0.0, description="Input squeezing")


class GbsDeskParams(_Params):
    n_modes: int = Field(default=4, ge=1, le=8)
    n_circuits: int = Field(default=3, ge=1)
    r_max: float = Field(default=0.6, ge=0.0)
    max_photons: int = Field(default=4, ge=0)
    n_samples: int = Field(default=1000, ge=0)
    repeats: int = Field(default=2, ge=1, description="Independent sampling runs compared by pattern fidelity")
    brute_force_cutoff: int = Field(default=14, ge=2, description="Fock cutoff of the brute-force cross-check")


PARAMS_FOR_KIND: Dict[str, Type[BaseModel]] = {
    "kerr-demo": KerrDemoParams,
    "cat-breed": CatBreedParams,
    "compass": CompassParams,
    "gkp": GkpParams,
    "bose-hubbard-sweep": BoseHubbardSweepParams,
    "bose-hubbard-timeseries": BoseHubbardTimeseriesParams,
    "cluster-nullifiers": ClusterNullifierParams,
    "gbs-desk": GbsDeskParams,
}

SAMPLING_KINDS = frozenset({"gkp", "gbs-desk"})

ExperimentKind = Literal[
    "kerr-demo",
    "cat-breed",
    "compass",
    "gkp",
    "bose-hubbard-sweep",
    "bose-hubbard-timeseries",
    "cluster-nullifiers",
    "gbs-desk",
]


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    truncation: Optional[float] = Field(default=None, gt=0.0, description="Truncation guard error threshold")


class ExperimentManifest(BaseModel):
    """One experiment run: kind, parameter block, seed and output location."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ExperimentKind = Field(..., description="Experiment kind")
    params: Dict[str, Any] = Field(default_factory=dict, description="Kind-specific parameter block")
    seed: Optional[int] = Field(default=None, ge=0, le=MAX_SEED, description="64-bit RNG seed")
    output_dir: str = Field(default="results", description="Directory receiving the artifacts")
    cutoff: Optional[int] = Field(default=None, ge=2, description="Fock cutoff override")
    tolerances: Tolerances = Field(default_factory=Tolerances, description="Tolerance overrides")

    @model_validator(mode="after")
    def _seed_for_sampling(self) -> "ExperimentManifest":
        if self.kind in SAMPLING_KINDS and self.seed is None:
            raise ValueError(f"seed is required for sampling experiment '{self.kind}'")
        return self

    def typed_params(self) -> BaseModel:
        return PARAMS_FOR_KIND[self.kind].model_validate(self.params)


def _field_path(error: dict, prefix: str = "") -> str:
    parts = [str(p) for p in error.get("loc", ())]
    return ".".join([prefix] + parts if prefix else parts)


def parse_manifest(data: Any) -> ExperimentManifest:
    """
    Validate raw manifest data and resolve the parameter block against its kind.

    Returns a manifest whose params carry every default explicitly.

    Raises:
        ManifestError: naming the dotted path of the first invalid field.
    """
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object")
    try:
        manifest = ExperimentManifest.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ManifestError(first["msg"], _field_path(first) or "manifest") from e
    try:
        params = manifest.typed_params()
    except ValidationError as e:
        first = e.errors()[0]
        raise ManifestError(first["msg"], _field_path(first, "params")) from e
    return manifest.model_copy(update={"params": params.model_dump(mode="json")})
