"""
Fockloop - Desk-scale time-bin photonic processor simulator
===========================================================

Command-line entry point: runs one experiment manifest, lists the available
experiment kinds, prints the version.

    python -m fockloop run manifest.json [--seed N] [--out DIR] [--timeline]
    python -m fockloop list
    python -m fockloop --version

Exit codes: 0 ok, 2 manifest error, 3 simulation error, 4 I/O error.
"""

import argparse
import json
import logging
import sys
import time
import traceback
from pathlib import Path
from typing import List, Optional

from fockloop_core import LOG_LEVEL, ExportError, FockloopError, ManifestError, __version__
from src.handlers.experiments import EXPERIMENTS, RunContext, run_experiment, timeline_program
from src.models.experiment_models import PARAMS_FOR_KIND, MachineSpec, parse_manifest
from src.simulation import loop_compiler
from src.utils.result_exporter import export_results

logger = logging.getLogger("fockloop")

EXIT_OK = 0
EXIT_MANIFEST = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

RESOLVED_MANIFEST = "manifest.resolved.json"
RUN_METADATA = "run_metadata.json"


# ============ COMMANDS ============


def load_manifest(path: Path, seed: Optional[int] = None, out: Optional[str] = None):
    """
    Read and validate a manifest file, applying command-line overrides.

    Raises:
        ManifestError: if the file is not JSON or does not validate.
        OSError: if the file cannot be read.
    """
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as e:
            raise ManifestError(f"not valid JSON ({e.msg} at line {e.lineno})", "manifest") from e
    if isinstance(data, dict):
        if seed is not None:
            data["seed"] = seed
        if out is not None:
            data["output_dir"] = out
    return parse_manifest(data)


def timeline_machine(program) -> MachineSpec:
    """Two-core machine with a delay line for every coupling the program uses."""
    delays = {abs(op.mode_j - op.mode_i) for op in program.ops if op.kind == "beamsplitter"} or {1}
    return MachineSpec(n_cores=2, delay_bins=frozenset(delays), n_bins=max(64, program.mode_count))


def run_command(args: argparse.Namespace) -> int:
    timings = {}
    started = time.perf_counter()
    manifest = load_manifest(Path(args.manifest), seed=args.seed, out=args.out)
    params = manifest.typed_params()
    timings["parse"] = time.perf_counter() - started

    ctx = RunContext(
        output_dir=Path(manifest.output_dir),
        seed=manifest.seed,
        cutoff=manifest.cutoff,
        tolerance=manifest.tolerances.truncation,
    )
    stage = time.perf_counter()
    try:
        result = run_experiment(manifest.kind, params, ctx)
    except FockloopError:
        logger.error("Experiment %s (seed %s) failed", manifest.kind, manifest.seed)
        raise
    timings["run"] = time.perf_counter() - stage
    artifacts = list(result.artifacts)

    if args.timeline:
        program = timeline_program(manifest.kind, params, manifest.seed)
        if program is None:
            logger.warning("Experiment %s has no circuit to schedule", manifest.kind)
        else:
            schedule = loop_compiler.compile(program, timeline_machine(program))
            export_results(schedule.to_json_dict(), ctx.path("schedule.json"))
            artifacts.append("schedule.json")
            print(loop_compiler.render_timeline(schedule), end="")

    export_results(manifest.model_dump(mode="json"), ctx.path(RESOLVED_MANIFEST))
    timings["total"] = time.perf_counter() - started
    export_results(
        {
            "kind": manifest.kind,
            "seed": manifest.seed,
            "version": __version__,
            "artifacts": artifacts + [RESOLVED_MANIFEST],
            "timings_s": timings,
        },
        ctx.path(RUN_METADATA),
    )
    logger.info("Run complete in %.2f s; results in %s", timings["total"], ctx.output_dir)
    return EXIT_OK


def list_experiments() -> str:
    """Experiment kinds with a one-line summary, the result they reproduce and their parameter defaults."""
    lines = []
    for kind, spec in EXPERIMENTS.items():
        lines.append(kind)
        lines.append(f"    {spec.summary}")
        lines.append(f"    reproduces: {spec.figure}")
        defaults = PARAMS_FOR_KIND[kind]().model_dump(mode="json")
        for name, value in defaults.items():
            lines.append(f"    {name} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"


# ============ ENTRY POINT ============


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockloop", description="Desk-scale time-bin photonic processor simulator")
    parser.add_argument("--version", action="version", version=f"fockloop {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one experiment manifest")
    run.add_argument("manifest", help="Path to the JSON manifest")
    run.add_argument("--seed", type=int, default=None, help="Override the manifest seed")
    run.add_argument("--out", default=None, help="Override the output directory")
    run.add_argument("--timeline", action="store_true", help="Print the loop-machine timeline of the circuit")

    commands.add_parser("list", help="List experiment kinds and their defaults")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print(list_experiments(), end="")
        return EXIT_OK
    try:
        return run_command(args)
    except ManifestError as e:
        logger.error("Manifest error: %s", e)
        return EXIT_MANIFEST
    except (ExportError, OSError) as e:
        logger.error("I/O error: %s", e)
        return EXIT_IO
    except FockloopError as e:
        logger.error("Simulation failed: %s", e)
        logger.debug("".join(traceback.format_exception(None, e, e.__traceback__)))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
