"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 compile error,
3 execution error. Errors are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .benchmark import DEFAULT_SHOTS, benchmark, compare_configurations, summary_table
from .compiler import CompilationError, compile_program, deserialize, serialize
from .compiler.binary import BinaryFormatError
from .config import ConfigError, load_config, save_csv, save_json
from .device import DeviceModelError
from .executor import ExecutionError, MemoryMap, MemoryMapError, execute, patch
from .ir import QuilError, parse

EXIT_USAGE, EXIT_COMPILE, EXIT_EXECUTION = 1, 2, 3


class CLIError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(EXIT_USAGE, "usage", f"{self.prog}: {message}")


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return str(value)


def _finite(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CLIError(EXIT_USAGE, "io", str(exc)) from None


# -- subcommands ----------------------------------------------------------------


def cmd_compile(args, config):
    try:
        binary = compile_program(parse(_read_text(args.source)), config.device, args.reset_rounds)
    except (QuilError, CompilationError) as exc:
        raise CLIError(EXIT_COMPILE, type(exc).__name__, str(exc)) from None
    out = Path(args.output or Path(args.source).with_suffix(".pqb"))
    out.write_bytes(serialize(binary))
    if args.dump:
        Path(args.dump).write_text(json.dumps(binary.to_json(), indent=2))
    _emit({"binary": str(out), "size_bytes": out.stat().st_size, "data_layout_bytes": binary.data_layout.total_size})


def cmd_run(args, config):
    try:
        data = Path(args.binary).read_bytes()
    except OSError as exc:
        raise CLIError(EXIT_USAGE, "io", str(exc)) from None
    try:
        binary = deserialize(data)
        memory = MemoryMap.from_json(_read_text(args.memory)) if args.memory else MemoryMap()
        report = execute(patch(binary, memory), config.device, args.shots or config.shots, args.seed,
                         args.reset or config.reset_mode)
    except (BinaryFormatError, MemoryMapError, ExecutionError) as exc:
        raise CLIError(EXIT_EXECUTION, type(exc).__name__, str(exc)) from None
    result = report.to_json()
    result["saved"] = str(save_json(config.output_dir, "run", result))
    if args.packed:
        Path(args.packed).write_bytes(report.packed_rows())
    _emit(result)


def _shot_list(text: str) -> tuple[int, ...]:
    if text == "default":
        return DEFAULT_SHOTS
    try:
        shots = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise CLIError(EXIT_USAGE, "usage", f"--sweep expects 'default' or comma-separated integers, got {text!r}")
    if not shots or min(shots) < 1:
        raise CLIError(EXIT_USAGE, "usage", "shot counts must be positive")
    return shots


def cmd_bench(args, config):
    mode = {"simulated": "simulated_clock", "wall": "wall_clock"}[args.mode]
    common = dict(shots_list=_shot_list(args.sweep), r=args.r, n_permutation_sets=args.sets, mode=mode,
                  seed=args.seed, family=args.family)
    try:
        if args.all_configs:
            results = compare_configurations(config.device, args.m, **common)
            named = {f"{'param' if p else 'recomp'}+{'active' if a else 'passive'}": r for (p, a), r in results.items()}
            print(summary_table(named))
            saved = save_json(config.output_dir, "bench-rpg", {k: v.to_dict() for k, v in named.items()})
            print(f"saved {saved}", file=sys.stderr)
            return
        result = benchmark(config.device, args.m, parametric=not args.no_parametric,
                           active_reset=args.active_reset, **common)
    except ExecutionError as exc:
        raise CLIError(EXIT_EXECUTION, "ExecutionError", str(exc)) from None
    rows = [(s.n, repr(s.total), repr(result.T_V), repr(result.T_Q), repr(result.n_c)) for s in result.samples]
    csv_path = save_csv(config.output_dir, "bench-rpg", ("n", "median_total_s", "T_V_s", "T_Q_s", "n_c"), rows)
    report = {"T_V_s": result.T_V, "T_Q_s": result.T_Q, "n_c": _finite(result.n_c), "m": result.m,
              "family": result.family, "parametric": result.parametric, "active_reset": result.active_reset,
              "mode": result.mode, "permutation_sets": len(result.fits), "csv": str(csv_path)}
    report["json"] = str(save_json(config.output_dir, "bench-rpg-fit", {**report, **result.to_dict()}))
    _emit(report)


def _estimates(estimates):
    return [e.to_dict() for e in estimates]


def cmd_experiment(args, config):
    from .experiment import Experiment, ExperimentError, ExperimentSpec

    try:
        raw = json.loads(_read_text(args.spec))
        spec = ExperimentSpec.from_dict(raw)
    except (json.JSONDecodeError, ExperimentError) as exc:
        raise CLIError(EXIT_USAGE, "spec", str(exc)) from None
    except QuilError as exc:
        raise CLIError(EXIT_COMPILE, type(exc).__name__, str(exc)) from None
    seed = args.seed if args.seed is not None else raw.get("seed")
    try:
        experiment = Experiment(spec, config.device, seed)
        points = raw.get("parameters") or [{}]
        results = experiment.sweep(points, seed)
    except (CompilationError, ExperimentError) as exc:
        raise CLIError(EXIT_COMPILE, type(exc).__name__, str(exc)) from None
    except (MemoryMapError, ExecutionError) as exc:
        raise CLIError(EXIT_EXECUTION, type(exc).__name__, str(exc)) from None
    payload = {"spec": spec.to_dict(), "points": [{"memory": p, "estimates": _estimates(r)} for p, r in zip(points, results)]}
    rows = [(i, e.observable, e.raw_mean, e.symmetrized_mean, e.calibration, e.corrected_mean, e.corrected_se)
            for i, r in enumerate(results) for e in r]
    payload["csv"] = str(save_csv(config.output_dir, "experiment",
                                  ("point", "observable", "raw", "symmetrized", "lambda", "corrected", "corrected_se"), rows))
    payload["saved"] = str(save_json(config.output_dir, "experiment", payload))
    _emit(payload)


def _device(args, config):
    return config.device.noiseless() if getattr(args, "noiseless", False) else config.device


def _shots(args):
    return None if args.exact else args.shots


def cmd_tomography(args, config):
    from .experiment import bell_tomography

    result = bell_tomography(_device(args, config), _shots(args), args.seed, correct=not args.no_correction,
                             reset_mode=args.reset or config.reset_mode)
    rho = result.density_matrix
    payload = {
        "fidelity": result.fidelity,
        "min_eigenvalue": result.min_eigenvalue,
        "density_matrix_real": rho.real.tolist(),
        "density_matrix_imag": rho.imag.tolist(),
        "expectations": {k: e.corrected_mean for k, e in result.estimates.items()},
        "compiles": result.compiles,
    }
    payload["saved"] = str(save_json(config.output_dir, "tomography-bell", payload))
    _emit(payload)


def cmd_vqe(args, config):
    from .experiment import load_h2_coefficients, vqe_h2

    try:
        table = load_h2_coefficients(args.coeffs)
    except (OSError, ValueError) as exc:
        raise CLIError(EXIT_USAGE, "coefficients", str(exc)) from None
    curves = vqe_h2(table, _device(args, config), _shots(args), args.seed, n_theta=args.n_theta,
                    correct=not args.no_correction, reset_mode=args.reset or config.reset_mode)
    summary = [{"R_angstrom": c.bond_length, "grid_min": c.grid_min, "fit_min": c.fit_min,
                "exact_ground": c.exact_ground, "error": c.error, "theta_at_min": c.fit_argmin} for c in curves]
    rows = [(c.bond_length, float(t), float(e), float(s)) for c in curves for t, e, s in zip(c.thetas, c.energies, c.energy_se)]
    payload = {"curves": summary, "compiles": curves[0].compiles if curves else 0,
               "csv": str(save_csv(config.output_dir, "vqe-h2", ("R_angstrom", "theta", "energy", "energy_se"), rows))}
    payload["saved"] = str(save_json(config.output_dir, "vqe-h2", payload))
    _emit(payload)


def _edges(text: str) -> list[tuple[int, int]]:
    try:
        edges = [tuple(int(q) for q in tok.split("-")) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise CLIError(EXIT_USAGE, "usage", f"cannot parse edges {text!r}; use e.g. '0-1 1-2'") from None
    if not edges or any(len(e) != 2 or e[0] == e[1] for e in edges):
        raise CLIError(EXIT_USAGE, "usage", f"invalid edge list {text!r}")
    return edges


def cmd_qaoa(args, config):
    from .experiment import maxcut_qaoa

    edges = _edges(args.edges)
    gammas = np.linspace(-math.pi / 2, math.pi / 2, args.n_gamma)
    try:
        result = maxcut_qaoa(edges, _device(args, config), _shots(args), args.seed, betas=args.beta, gammas=gammas,
                             correct=not args.no_correction, reset_mode=args.reset or config.reset_mode)
    except CompilationError as exc:
        raise CLIError(EXIT_COMPILE, "CompilationError", str(exc)) from None
    rows = [(f"{a}-{b}", float(g), float(v), float(s))
            for (a, b), vals in result.zz.items() for g, v, s in zip(gammas, vals[0], result.zz_se[(a, b)][0])]
    payload = {
        "beta": args.beta,
        "gammas": gammas.tolist(),
        "zz": {f"{a}-{b}": v[0].tolist() for (a, b), v in result.zz.items()},
        "compiles": result.compiles,
        "csv": str(save_csv(config.output_dir, "qaoa-maxcut", ("edge", "gamma", "zz", "zz_se"), rows)),
    }
    payload["saved"] = str(save_json(config.output_dir, "qaoa-maxcut", payload))
    _emit(payload)


def cmd_serve(args, config):
    from .service import serve

    serve(config, args.host, args.port)


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    config_help = "platform config file (default: $QCLOUD_CONFIG or built-in defaults)"
    parser = _Parser(prog="qcloud", description="Simulated quantum cloud platform")
    parser.add_argument("--config", help=config_help)
    # accepted after the subcommand too; SUPPRESS keeps a subparser from resetting the top-level value
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help=config_help)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", parents=[common], help="compile a .quil program to a .pqb binary")
    p.add_argument("source")
    p.add_argument("-o", "--output")
    p.add_argument("--reset-rounds", type=int, default=3)
    p.add_argument("--dump", help="also write a JSON dump of all binary sections")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", parents=[common], help="patch and execute a .pqb binary")
    p.add_argument("binary")
    p.add_argument("--memory", help="JSON file holding a memory map {region: [values]}")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--reset", choices=("passive", "active"))
    p.add_argument("--packed", help="write bitstrings as packed rows to this file")
    p.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", parents=[common], help="latency benchmarks")
    bsub = bench.add_subparsers(dest="family_command", required=True, parser_class=_Parser)
    p = bsub.add_parser("rpg", parents=[common], help="sweep shot counts and fit T(n) = T_V + n T_Q")
    p.add_argument("--m", type=int, help="qubit count (default: log2 quantum volume of the device)")
    p.add_argument("--sweep", default="default", help="'default' or comma-separated shot counts")
    p.add_argument("--mode", choices=("simulated", "wall"), default="simulated")
    p.add_argument("--r", type=int, default=100, help="runs per shot count")
    p.add_argument("--sets", type=int, default=5, help="number of permutation sets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", default="RPG", choices=("RPG", "GHZ_LINE", "MAXCUTQAOA_COMPLETE"))
    p.add_argument("--no-parametric", action="store_true", help="recompile on every run")
    p.add_argument("--active-reset", action="store_true")
    p.add_argument("--all-configs", action="store_true", help="run all four configurations and print a table")
    p.set_defaults(func=cmd_bench)

    exp = sub.add_parser("experiment", parents=[common], help="Pauli-setting experiments")
    esub = exp.add_subparsers(dest="experiment_command", required=True, parser_class=_Parser)
    p = esub.add_parser("run", parents=[common])
    p.add_argument("spec", help="experiment spec JSON")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_experiment)

    def driver_options(p):
        p.add_argument("--shots", type=int, default=10_000, help="shots per setting")
        p.add_argument("--exact", action="store_true", help="use exact outcome distributions instead of sampling")
        p.add_argument("--noiseless", action="store_true", help="disable readout noise")
        p.add_argument("--no-correction", action="store_true", help="skip the lambda calibration")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--reset", choices=("passive", "active"))

    tomo = sub.add_parser("tomography", parents=[common], help="state tomography")
    tsub = tomo.add_subparsers(dest="tomography_command", required=True, parser_class=_Parser)
    p = tsub.add_parser("bell", parents=[common])
    driver_options(p)
    p.set_defaults(func=cmd_tomography)

    vqe = sub.add_parser("vqe", parents=[common], help="variational eigensolver scans")
    vsub = vqe.add_subparsers(dest="vqe_command", required=True, parser_class=_Parser)
    p = vsub.add_parser("h2", parents=[common])
    p.add_argument("--coeffs", help="R_angstrom,g0..g5 CSV (default: bundled illustrative sample)")
    p.add_argument("--n-theta", type=int, default=250)
    driver_options(p)
    p.set_defaults(func=cmd_vqe)

    qaoa = sub.add_parser("qaoa", parents=[common], help="QAOA sweeps")
    qsub = qaoa.add_subparsers(dest="qaoa_command", required=True, parser_class=_Parser)
    p = qsub.add_parser("maxcut", parents=[common])
    p.add_argument("--edges", default="0-1", help="edge list such as '0-1 1-2'")
    p.add_argument("--beta", type=float, default=math.pi / 8)
    p.add_argument("--n-gamma", type=int, default=100)
    driver_options(p)
    p.set_defaults(func=cmd_qaoa)

    p = sub.add_parser("serve", parents=[common], help="start the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        try:
            config = load_config(args.config)
        except (ConfigError, DeviceModelError) as exc:
            raise CLIError(EXIT_USAGE, "config", str(exc)) from None
        args.func(args, config)
    except CLIError as exc:
        print(json.dumps({"error": {"type": exc.kind, "message": str(exc), "exit_code": exc.code}}), file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
