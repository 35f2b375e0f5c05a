"""
Experiment Handlers

One runner per experiment kind. Each runner takes the resolved parameter
block and a RunContext, writes its result files into the output directory and
returns the written paths with a short summary for the log.
"""

import itertools
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from fockloop_core import DEFAULT_CUTOFF, PROTOCOL_CUTOFF
from src.engines import fock_engine, gaussian_engine
from src.models.circuit_model import BeamSplitter, CircuitProgram, Kerr, Phase, Squeeze
from src.models.experiment_models import (
    BoseHubbardSweepParams,
    BoseHubbardTimeseriesParams,
    BreedingConfig,
    CatBreedParams,
    ClusterNullifierParams,
    CompassParams,
    GbsDeskParams,
    GkpParams,
    KerrDemoParams,
    LatticeSpec,
)
from src.protocols import cat_breeding, gkp_synthesis, rate_model
from src.simulation import bose_hubbard
from src.utils.result_exporter import config_label, export_results, write_jsonl
from src.utils.wigner_analysis import minimum, negativity_volume, wigner

logger = logging.getLogger(__name__)

GKP_REP_RATE_HZ = 250e3
NULLIFIER_THRESHOLD_DB = -3.0
BH_COLUMNS = ["u_over_j", "t", "initial", "config", "p_trotter", "p_exact", "tv_distance"]


class RunContext(BaseModel):
    """Per-run settings shared by every runner."""

    model_config = ConfigDict(frozen=True)

    output_dir: Path = Field(..., description="Directory receiving the result files")
    seed: Optional[int] = Field(default=None, description="Root RNG seed")
    cutoff: Optional[int] = Field(default=None, description="Fock cutoff override")
    tolerance: Optional[float] = Field(default=None, description="Truncation guard override")

    def cutoff_or(self, default: int) -> int:
        return default if self.cutoff is None else self.cutoff

    def path(self, name: str) -> Path:
        return self.output_dir / name


class RunResult(BaseModel):
    artifacts: List[str] = Field(default_factory=list, description="Written result files, relative names")
    summary: Dict[str, object] = Field(default_factory=dict, description="Headline numbers for the log")


def _write_wigner(state, ctx: RunContext, half_width: float, points: int, stem: str = "wigner") -> Dict[str, float]:
    grid = wigner(state, half_width=half_width, points=points)
    export_results(grid.to_rows(), ctx.path(f"{stem}.csv"), columns=["x", "p", "W"])
    export_results(grid.to_json_dict(), ctx.path(f"{stem}.json"))
    return {"wigner_min": minimum(grid), "negativity_volume": negativity_volume(grid)}


# ============ RUNNERS ============


def run_kerr_demo(params: KerrDemoParams, ctx: RunContext) -> RunResult:
    """Kerr gate on a coherent state; Wigner negativity and fidelity under output loss."""
    cutoff = ctx.cutoff_or(DEFAULT_CUTOFF)
    coherent = fock_engine.coherent_state(params.alpha, cutoff)
    ideal = fock_engine.apply_gate(coherent, Kerr(mode=0, strength=params.phi), tolerance=ctx.tolerance)
    wigner_stats = _write_wigner(ideal, ctx, params.grid_half_width, params.grid_points)

    rho = fock_engine.to_density(ideal)
    loss_rows = []
    for eta in params.loss_etas:
        lossy = fock_engine.apply_loss(rho, 0, eta)
        loss_rows.append({"eta": float(eta), "fidelity": fock_engine.fidelity(ideal, lossy)})
    export_results(loss_rows, ctx.path("kerr_loss.csv"), columns=["eta", "fidelity"])

    metrics = {
        "alpha": params.alpha,
        "phi": params.phi,
        "cutoff": cutoff,
        "self_fidelity": fock_engine.fidelity(ideal, ideal),
        **wigner_stats,
        "loss_scan": loss_rows,
    }
    export_results(metrics, ctx.path("metrics.json"))
    return RunResult(
        artifacts=["wigner.csv", "wigner.json", "kerr_loss.csv", "metrics.json"],
        summary={"wigner_min": wigner_stats["wigner_min"]},
    )


def run_cat_breed(params: CatBreedParams, ctx: RunContext) -> RunResult:
    """Squeezed single photon bred at zero outcome for n_rounds, with a cat fit per round."""
    cutoff = ctx.cutoff_or(PROTOCOL_CUTOFF)
    cfg = BreedingConfig(r_initial=params.r, n_rounds=params.n_rounds, feed_forward=False)
    state = cat_breeding.make_small_cat(params.r, cutoff, axis="p", tolerance=ctx.tolerance)
    rows = []
    for round_index in range(params.n_rounds + 1):
        if round_index:
            state, _ = cat_breeding.breed_round(state, state, cfg, outcome=0.0, tolerance=ctx.tolerance)
        parity = -1 if round_index == 0 else 1
        alpha, fid = cat_breeding.fit_cat_amplitude(state, parity=parity, axis="p")
        rows.append(
            {
                "round": round_index,
                "alpha_fit": alpha,
                "fit_fidelity": fid,
                "parity": fock_engine.parity_expectation(state),
                "mean_photons": fock_engine.photon_number_mean(state, 0),
            }
        )
        logger.info("Breeding round %d: alpha=%.4f fidelity=%.4f", round_index, alpha, fid)
    export_results(rows, ctx.path("rounds.csv"))
    wigner_stats = _write_wigner(state, ctx, params.grid_half_width, params.grid_points)
    export_results({"r": params.r, "cutoff": cutoff, "rounds": rows, **wigner_stats}, ctx.path("metrics.json"))
    return RunResult(
        artifacts=["rounds.csv", "wigner.csv", "wigner.json", "metrics.json"],
        summary={"alpha_fit": rows[-1]["alpha_fit"], "wigner_min": wigner_stats["wigner_min"]},
    )


def run_compass(params: CompassParams, ctx: RunContext) -> RunResult:
    """Compass state heralded on a PNRD count; compared with two- and four-lobe fits."""
    cutoff = ctx.cutoff_or(PROTOCOL_CUTOFF)
    compass, probability = cat_breeding.make_compass(params.r, cutoff, params.herald_n, tolerance=ctx.tolerance)
    wigner_stats = _write_wigner(compass, ctx, params.grid_half_width, params.grid_points)
    _, cat_fid = cat_breeding.fit_superposition(compass, 2, angle=np.pi / 4)
    alpha, compass_fid = cat_breeding.fit_superposition(compass, 4, angle=np.pi / 4)
    metrics = {
        "r": params.r,
        "herald_n": params.herald_n,
        "herald_probability": probability,
        "two_lobe_fidelity": cat_fid,
        "four_lobe_fidelity": compass_fid,
        "four_lobe_alpha": alpha,
        **wigner_stats,
    }
    export_results(metrics, ctx.path("metrics.json"))
    return RunResult(
        artifacts=["wigner.csv", "wigner.json", "metrics.json"],
        summary={"herald_probability": probability, "wigner_min": wigner_stats["wigner_min"]},
    )


def run_gkp(params: GkpParams, ctx: RunContext) -> RunResult:
    """Monte-Carlo GKP breeding tree; ensemble metrics, x marginals and ancilla records."""
    cfg = BreedingConfig(**{name: getattr(params, name) for name in BreedingConfig.model_fields})
    trajectories, metrics = gkp_synthesis.synthesize_gkp(
        cfg,
        params.n_trajectories,
        ctx.seed,
        cutoff=ctx.cutoff_or(gkp_synthesis.GKP_CUTOFF),
        tolerance=ctx.tolerance,
    )
    grid = np.linspace(-params.marginal_half_width, params.marginal_half_width, params.marginal_points)
    export_results(gkp_synthesis.marginal_table(trajectories, grid), ctx.path("marginal.csv"))
    write_jsonl(
        (
            {"trajectory": i, "accepted": t.accepted, "records": [r.model_dump(mode="json") for r in t.records]}
            for i, t in enumerate(trajectories)
        ),
        ctx.path("records.jsonl"),
    )
    sources = 2 ** cfg.n_rounds
    summary = {
        **metrics.model_dump(mode="json"),
        "states_per_second_at_250khz": rate_model.rate_model(
            GKP_REP_RATE_HZ, metrics.acceptance_fraction, cfg.herald_eta, sources_per_event=sources
        ),
    }
    export_results(summary, ctx.path("metrics.json"))
    return RunResult(
        artifacts=["marginal.csv", "records.jsonl", "metrics.json"],
        summary={"s_x": metrics.s_x, "var_product": metrics.var_product},
    )


def _lattice(params) -> LatticeSpec:
    return LatticeSpec(
        n_sites=params.n_sites, J=params.J, boundary=params.boundary, splitting=params.splitting
    )


def run_bose_hubbard_sweep(params: BoseHubbardSweepParams, ctx: RunContext) -> RunResult:
    """U/J sweep at fixed t: Trotter circuit against the exact oracle."""
    rows = bose_hubbard.sweep_and_timeseries(
        _lattice(params), params.initial_states, params.u_over_j, [params.t], params.n_steps
    )
    export_results(rows, ctx.path("sweep.csv"), columns=BH_COLUMNS)
    return RunResult(artifacts=["sweep.csv"], summary={"max_tv": max(r["tv_distance"] for r in rows)})


def run_bose_hubbard_timeseries(params: BoseHubbardTimeseriesParams, ctx: RunContext) -> RunResult:
    """Time series at fixed U/J: Trotter circuit against the exact oracle."""
    rows = bose_hubbard.sweep_and_timeseries(
        _lattice(params), params.initial_states, [params.u_over_j], params.t_grid, params.n_steps
    )
    export_results(rows, ctx.path("timeseries.csv"), columns=BH_COLUMNS)
    return RunResult(artifacts=["timeseries.csv"], summary={"max_tv": max(r["tv_distance"] for r in rows)})


def run_cluster_nullifiers(params: ClusterNullifierParams, ctx: RunContext) -> RunResult:
    """EPR-chain nullifier variances per bin on the covariance engine."""
    rows = gaussian_engine.nullifier_sweep(params.n_bins, params.r)
    export_results(rows, ctx.path("nullifiers.csv"))
    worst = max(max(r["x_variance_db"], r["p_variance_db"]) for r in rows)
    summary = {
        "n_bins": params.n_bins,
        "r": params.r,
        "expected_db": float(10.0 * np.log10(np.exp(-2.0 * params.r))),
        "max_variance_db": worst,
        "below_threshold": bool(worst < NULLIFIER_THRESHOLD_DB),
    }
    export_results(summary, ctx.path("metrics.json"))
    return RunResult(artifacts=["nullifiers.csv", "metrics.json"], summary={"max_variance_db": worst})


def random_gbs_circuit(n_modes: int, r_max: float, rng: np.random.Generator) -> CircuitProgram:
    """Squeezed inputs followed by a brick-wall mesh of random beamsplitters and phases."""
    ops: list = [Squeeze(mode=k, r=float(rng.uniform(0.0, r_max))) for k in range(n_modes)]
    for layer in range(n_modes):
        for i in range(layer % 2, n_modes - 1, 2):
            ops.append(
                BeamSplitter(
                    mode_i=i, mode_j=i + 1, theta=float(rng.uniform(0, np.pi / 2)), phi=float(rng.uniform(0, 2 * np.pi))
                )
            )
    ops.extend(Phase(mode=k, phi=float(rng.uniform(0, 2 * np.pi))) for k in range(n_modes))
    return CircuitProgram(mode_count=n_modes, ops=ops)


def low_photon_patterns(n_modes: int, max_photons: int) -> List[tuple]:
    return [p for p in itertools.product(range(max_photons + 1), repeat=n_modes) if sum(p) <= max_photons]


def run_gbs_desk(params: GbsDeskParams, ctx: RunContext) -> RunResult:
    """Hafnian probabilities cross-checked against the Fock engine, plus sampler stability."""
    root = np.random.SeedSequence(ctx.seed)
    circuit_seeds = root.spawn(params.n_circuits)
    patterns = low_photon_patterns(params.n_modes, params.max_photons)
    rows, circuits = [], []
    for index, seq in enumerate(circuit_seeds):
        rng = np.random.default_rng(seq)
        program = random_gbs_circuit(params.n_modes, params.r_max, rng)
        gaussian = gaussian_engine.run_gaussian_program(program)
        # Low-photon amplitudes are exact at any cutoff; the guard is relaxed for the cropped tail.
        fock = fock_engine.run_program(
            program, fock_engine.vacuum(params.n_modes, params.brute_force_cutoff), tolerance=1e-3
        )
        tensor = fock.tensor
        max_diff, mass = 0.0, 0.0
        for pattern in patterns:
            p_haf = gaussian_engine.gbs_probability(gaussian, pattern)
            p_fock = float(abs(tensor[pattern]) ** 2 * fock.norm_weight)
            max_diff = max(max_diff, abs(p_haf - p_fock))
            mass += p_haf
            rows.append(
                {
                    "circuit": index,
                    "pattern": config_label(pattern),
                    "p_hafnian": p_haf,
                    "p_fock": p_fock,
                    "abs_diff": abs(p_haf - p_fock),
                }
            )

        distributions = [
            gaussian_engine.empirical_distribution(gaussian_engine.gbs_sample(gaussian, params.n_samples, sub_rng))
            for sub_rng in (np.random.default_rng(s) for s in seq.spawn(params.repeats))
        ]
        stability = [gaussian_engine.pattern_fidelity(distributions[0], d) for d in distributions[1:]]
        circuits.append(
            {
                "circuit": index,
                "max_abs_diff": max_diff,
                "low_photon_mass": mass,
                "fock_norm": fock.norm_weight,
                "sampler_fidelity": stability,
            }
        )
        logger.info("GBS circuit %d: max |diff| %.3e, mass %.6f", index, max_diff, mass)
    export_results(rows, ctx.path("patterns.csv"))
    export_results({"n_modes": params.n_modes, "max_photons": params.max_photons, "circuits": circuits}, ctx.path("metrics.json"))
    return RunResult(
        artifacts=["patterns.csv", "metrics.json"],
        summary={"max_abs_diff": max(c["max_abs_diff"] for c in circuits)},
    )


# ============ REGISTRY ============


class ExperimentSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: str
    runner: Callable[..., RunResult]
    summary: str
    figure: str


EXPERIMENTS: Dict[str, ExperimentSpec] = {
    spec.kind: spec
    for spec in [
        ExperimentSpec(
            kind="kerr-demo",
            runner=run_kerr_demo,
            summary="Kerr gate on a coherent state: Wigner negativity, fidelity vs output loss",
            figure="Kerr-state Wigner function and its fidelity under output loss",
        ),
        ExperimentSpec(
            kind="cat-breed",
            runner=run_cat_breed,
            summary="Inline-squeezed single photon and zero-outcome breeding rounds",
            figure="Small-cat and bred-cat Wigner functions with fitted amplitudes",
        ),
        ExperimentSpec(
            kind="compass",
            runner=run_compass,
            summary="Compass state from two cats heralded by a PNRD count",
            figure="Four-lobed compass Wigner function heralded by two photons",
        ),
        ExperimentSpec(
            kind="gkp",
            runner=run_gkp,
            summary="GKP synthesis by breeding with homodyne feed-forward",
            figure="Grid-state x marginal, stabilizers and central-peak variances",
        ),
        ExperimentSpec(
            kind="bose-hubbard-sweep",
            runner=run_bose_hubbard_sweep,
            summary="Bose-Hubbard U/J sweep, Trotter circuit vs exact oracle",
            figure="Three-site configuration probabilities across U/J",
        ),
        ExperimentSpec(
            kind="bose-hubbard-timeseries",
            runner=run_bose_hubbard_timeseries,
            summary="Bose-Hubbard time series at fixed U/J",
            figure="Three-site configuration probabilities over time at U/J = 1",
        ),
        ExperimentSpec(
            kind="cluster-nullifiers",
            runner=run_cluster_nullifiers,
            summary="EPR-chain cluster nullifier variances in dB",
            figure="x and p nullifier variances per time bin against the -3 dB line",
        ),
        ExperimentSpec(
            kind="gbs-desk",
            runner=run_gbs_desk,
            summary="Desk-scale Gaussian boson sampling cross-check",
            figure="Low-photon pattern probabilities, hafnian against brute force",
        ),
    ]
}


def run_experiment(kind: str, params: BaseModel, ctx: RunContext) -> RunResult:
    """Dispatch to the runner registered for ``kind``."""
    spec = EXPERIMENTS[kind]
    ctx.output_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Running %s into %s", kind, ctx.output_dir)
    result = spec.runner(params, ctx)
    logger.info("Finished %s: %s", kind, result.summary)
    return result


def timeline_program(kind: str, params: BaseModel, seed: Optional[int]) -> Optional[CircuitProgram]:
    """A representative circuit of the experiment for the loop-machine timeline, if it has one."""
    if kind in ("bose-hubbard-sweep", "bose-hubbard-timeseries"):
        spec = _lattice(params).with_updates(t=1.0)
        return bose_hubbard.trotter_compile(spec, 1)
    if kind == "gbs-desk":
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
        return random_gbs_circuit(params.n_modes, params.r_max, rng)
    return None
