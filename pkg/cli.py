#!/usr/bin/env python3
"""
Command-line front end for tiltbend.

Subcommands:
    meshgen  generate an analytic sphere or torus as OFF + JSON sidecar
    energy   evaluate the energy breakdown of a mesh and a director
    sweep    run an eps x level sweep from a key=value config file
    verify   run the seeded identity battery

Exit codes: 0 ok, 1 verification failure, 2 domain error, 3 I/O or parse error.
"""

import os
import sys
import argparse
import logging
from typing import Dict, List, Any, Optional

import pandas as pd
from pydantic import ValidationError

from agents.verification_agent import VerificationAgent
from config.config import Config
from models.reports import SweepConfig
from tools.director_tool import (
    DirectorField, make_normal_director, make_tilted_director, tangent_field, load_director, W_FIELDS,
)
from tools.energy_tool import q_epsilon
from tools.gauss_graph_tool import graph_face_batch, graph_faces_frame
from utils.common import dump_json, write_csv_report
from utils.errors import TiltbendError, FoldOverError
from utils.mesh import generate_primitive, load_off, save_off
from workflow import run_sweep, write_sweep_outputs

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_DOMAIN = 2
EXIT_IO = 3


def parse_director_spec(spec: str, default_eps: float) -> Dict[str, Any]:
    """
    Parse normal | tilted:<w>:<eps,eps,...> | file:<path>.

    Returns:
        Dict with 'kind', 'eps' (list) and 'w' or 'path'
    """
    if spec == "normal":
        return {"kind": "normal", "eps": [default_eps]}
    if spec.startswith("file:"):
        return {"kind": "file", "path": spec[len("file:"):], "eps": [default_eps]}
    if spec.startswith("tilted:"):
        parts = spec.split(":")
        if len(parts) != 3 or parts[1] not in W_FIELDS:
            raise argparse.ArgumentTypeError(
                f"Director spec must be tilted:<w>:<eps-list> with w in {sorted(W_FIELDS)}, got '{spec}'")
        try:
            eps = [float(e) for e in parts[2].split(",") if e.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"Bad eps list in director spec '{spec}'")
        if not eps:
            raise argparse.ArgumentTypeError(f"Empty eps list in director spec '{spec}'")
        return {"kind": "tilted", "w": parts[1], "eps": eps}
    raise argparse.ArgumentTypeError(f"Unknown director spec '{spec}'")


def cmd_meshgen(args: argparse.Namespace) -> int:
    """Generate a primitive and print its statistics."""
    if args.kind == "sphere":
        params = {"r": args.r}
    else:
        params = {"R": args.R, "r": args.r, "nu": args.nu, "nv": args.nv}
    mesh = generate_primitive(args.kind, params, args.level)
    out = args.out or f"{args.kind}_level{args.level}.off"
    save_off(mesh, out)
    stats = mesh.statistics()
    stats["path"] = out
    print(dump_json(stats))
    return EXIT_OK


def cmd_energy(args: argparse.Namespace) -> int:
    """Evaluate the energy breakdown for each eps of the director spec."""
    director = parse_director_spec(args.director, args.eps)
    mesh = load_off(args.mesh, require_closed=not args.allow_open)

    results = []
    first_field: Optional[DirectorField] = None
    for eps in director["eps"]:
        if director["kind"] == "normal":
            field = make_normal_director(mesh)
        elif director["kind"] == "file":
            field = load_director(director["path"], mesh)
        else:
            field = make_tilted_director(mesh, tangent_field(mesh, director["w"]), eps)
        first_field = field if first_field is None else first_field
        breakdown = q_epsilon(mesh, field, eps)
        results.append({"eps": eps, **breakdown.model_dump()})

    if args.graph_csv:
        batch = graph_face_batch(mesh, first_field)
        write_csv_report(graph_faces_frame(batch.graph, batch.data.faces), args.graph_csv, "graph_faces")

    output: Any = results[0] if len(results) == 1 else results
    print(dump_json(output))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run a sweep and write its CSV and JSON reports."""
    config = SweepConfig.from_file(args.config)
    report = run_sweep(config, threads=args.threads)
    paths = write_sweep_outputs(report, args.out_dir)
    print(dump_json({"passed": report.passed, "failed_cells": report.failed_cells,
                     "checks": report.fits.checks if report.fits else {}, "outputs": paths}))
    if not report.passed:
        logger.error("Sweep checks failed")
        return EXIT_VERIFICATION
    return EXIT_OK


def identities_frame(report) -> pd.DataFrame:
    return pd.DataFrame(
        [{"identity": r.identity, "trials": r.trials, "max_residual": r.max_residual,
          "failures": len(r.failures)} for r in report.identities],
        columns=["identity", "trials", "max_residual", "failures"],
    )


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the identity battery."""
    state = VerificationAgent(verbose=True).run({"seed": args.seed, "trials": args.trials})
    report = state["report"]
    text = dump_json(report.model_dump())
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        write_csv_report(identities_frame(report), os.path.join(args.out_dir, "verify_identities.csv"),
                         "verify_identities")
        with open(os.path.join(args.out_dir, "verify_report.json"), "w", newline="\n") as f:
            f.write(text + "\n")
    print(text)
    if not report.passed:
        for result in report.identities:
            for failure in result.failures:
                print(f"FAILED {result.identity}: {dump_json(failure)}", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiltbend", description="Director-tilt bending energy on triangle meshes")
    parser.add_argument('--verbose', '-v', help='Debug logging', action='store_true')
    sub = parser.add_subparsers(dest="command", required=True)

    meshgen = sub.add_parser("meshgen", help="Generate an analytic sphere or torus")
    meshgen.add_argument("kind", choices=["sphere", "torus"])
    meshgen.add_argument("--r", type=float, default=1.0, help="Sphere radius or torus minor radius")
    meshgen.add_argument("--R", type=float, default=2.0 ** 0.5, help="Torus major radius")
    meshgen.add_argument("--nu", type=int, default=32, help="Torus grid size around the axis")
    meshgen.add_argument("--nv", type=int, default=32, help="Torus grid size around the tube")
    meshgen.add_argument("--level", type=int, default=0)
    meshgen.add_argument("--out", default=None, help="OFF path")
    meshgen.set_defaults(func=cmd_meshgen)

    energy = sub.add_parser("energy", help="Energy breakdown of a mesh and director")
    energy.add_argument("mesh", help="OFF file")
    energy.add_argument("--director", default="normal", help="normal | tilted:<w>:<eps-list> | file:<path>")
    energy.add_argument("--eps", type=float, default=1.0, help="Tilt scale for normal and file directors")
    energy.add_argument("--allow-open", action="store_true", help="Accept meshes with boundary")
    energy.add_argument("--graph-csv", default=None, help="Write per-face graph data of the first director")
    energy.set_defaults(func=cmd_energy)

    sweep = sub.add_parser("sweep", help="Run an eps x level sweep")
    sweep.add_argument("config", help="key=value config file")
    sweep.add_argument("--out-dir", default=Config.OUTPUT_DIR)
    sweep.add_argument("--threads", type=int, default=None, help="Worker count, capped by TILTBEND_THREADS")
    sweep.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="Run the seeded identity battery")
    verify.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)
    verify.add_argument("--trials", type=int, default=Config.DEFAULT_TRIALS)
    verify.add_argument("--out-dir", default=None, help="Also write CSV and JSON reports here")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.getLogger().setLevel(logging.DEBUG if args.verbose else Config.LOG_LEVEL)
    try:
        return args.func(args)
    except FoldOverError as e:
        logger.error(str(e))
        print(dump_json({"error": "fold-over", "faces": e.faces, "vertices": e.vertices}), file=sys.stderr)
        return EXIT_DOMAIN
    except TiltbendError as e:
        logger.error(str(e))
        return e.exit_code
    except argparse.ArgumentTypeError as e:
        logger.error(str(e))
        return EXIT_IO
    except (OSError, ValidationError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
