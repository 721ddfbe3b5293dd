"""Command-line interface.

Verbs: sweep, pes-sweep, breaking-points, characterize, ellipsoid, tomo-sim,
selftest. Each verb reads an optional JSON config file (--config) and applies
command-line flags on top (flags win). Output goes to --out, or to stdout
when --out is omitted; relative output paths are resolved against the
directory named by the ENTDYN_OUTDIR environment variable when it is set.

Exit codes: 0 success, 1 bad configuration or input, 2 numerical failure
(non-convergence or a failed self-test), 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .channels import channel_for, channel_from_json
from .dynamics import concurrence
from .harness import (
    ENV_OUTDIR,
    ConfigError,
    NumericalError,
    Pipeline,
    analytic_prediction,
    emit,
    initial_spec_from,
    make_initial,
    render,
    run_breaking_points,
    run_channel_characterization,
    run_pes_sweep,
    run_selftest,
    run_sweep,
    sweep_config_from_dict,
)
from .states import matrix_to_json, purity
from .tomography import (
    ellipsoid_mesh,
    monte_carlo_errors,
    read_counts_csv,
    reconstruct_state_mle,
    simulate_counts,
    standard_settings,
    write_counts_csv,
)


def _resolve_out(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(ENV_OUTDIR)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def _write_or_print(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config: top-level JSON value must be an object")
    return obj


def _parse_grid_flag(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"p_grid: expected start:stop:points, got {text!r}")
        return [float(x) for x in np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))]
    return [float(x) for x in text.split(",") if x.strip()]


def _sweep_config_from_args(args, multi_initial: bool = False):
    obj = _load_config_file(args.config)
    if args.family is not None:
        obj["family"] = args.family
    if args.mode is not None:
        obj["mode"] = args.mode.replace("-", "_")
    if args.p_grid is not None:
        obj["p_grid"] = _parse_grid_flag(args.p_grid)
    if getattr(args, "noisy_qubit", None) is not None:
        obj["noisy_qubit"] = args.noisy_qubit
    if getattr(args, "p_scale", None) is not None:
        obj["p_scale"] = args.p_scale
    initial = getattr(args, "initial", None)
    if initial:
        if multi_initial:
            obj["initials"] = list(initial)
        else:
            obj["initial"] = initial
    pipeline = dict(obj.get("pipeline", {})) if isinstance(obj.get("pipeline"), dict) else {}
    if isinstance(obj.get("pipeline"), str):
        pipeline = {"kind": obj["pipeline"]}
    if args.pipeline is not None:
        pipeline["kind"] = args.pipeline
    if args.counts is not None:
        pipeline["n_per_setting"] = args.counts
    if args.trials is not None:
        pipeline["trials"] = args.trials
    if args.seed is not None:
        pipeline["seed"] = args.seed
    if args.likelihood is not None:
        pipeline["likelihood"] = args.likelihood
    if pipeline:
        obj["pipeline"] = pipeline
    return sweep_config_from_dict(obj)


def _cmd_sweep(args) -> int:
    config = _sweep_config_from_args(args)
    rows = run_sweep(config)
    _write_or_print(render(rows, args.format), _resolve_out(args.out))
    return 0


def _cmd_pes_sweep(args) -> int:
    config = _sweep_config_from_args(args, multi_initial=True)
    tables = run_pes_sweep(config)
    out = _resolve_out(args.out)
    if args.format == "json":
        payload = {
            label: json.loads(render(rows, "json")) for label, rows in sorted(tables.items())
        }
        _write_or_print(json.dumps(payload, indent=2) + "\n", out)
        return 0
    if out is None:
        chunks = [f"# initial: {label}\n{render(rows, 'csv')}" for label, rows in sorted(tables.items())]
        sys.stdout.write("\n".join(chunks))
        return 0
    for label, rows in sorted(tables.items()):
        target = out.with_name(f"{out.stem}_{label}{out.suffix or '.csv'}")
        target.parent.mkdir(parents=True, exist_ok=True)
        emit(rows, "csv", target)
    return 0


def _cmd_breaking_points(args) -> int:
    rows = run_breaking_points()
    _write_or_print(render(rows, args.format), _resolve_out(args.out))
    return 0


def _cmd_characterize(args) -> int:
    p_grid = _parse_grid_flag(args.p_grid) if args.p_grid else list(np.linspace(0.0, 1.0, 11))
    rows = run_channel_characterization(
        args.family, p_grid, n_per_probe=args.counts, seed=args.seed or 0
    )
    _write_or_print(render(rows, args.format), _resolve_out(args.out))
    return 0


def _cmd_ellipsoid(args) -> int:
    if args.channel:
        with open(args.channel) as fh:
            channel = channel_from_json(json.load(fh))
    else:
        if args.p is None:
            raise ConfigError("p: required unless --channel is given")
        channel = channel_for(args.family, args.p)
    mesh = ellipsoid_mesh(channel, n_theta=args.n_theta, n_phi=args.n_phi)
    if args.format == "json":
        text = json.dumps([[float(x) for x in point] for point in mesh], indent=2) + "\n"
    else:
        lines = ["x,y,z"] + [",".join(repr(float(x)) for x in point) for point in mesh]
        text = "\n".join(lines) + "\n"
    _write_or_print(text, _resolve_out(args.out))
    return 0


def _cmd_tomo_sim(args) -> int:
    spec = initial_spec_from(args.initial or "bell:phi+")
    mode = (args.mode or "one_sided").replace("-", "_")
    pipeline = Pipeline(
        kind="shot_noise",
        n_per_setting=args.counts or 10_000,
        trials=args.trials or 50,
        seed=args.seed or 0,
        likelihood=args.likelihood or "gaussian",
    )
    config = sweep_config_from_dict(
        {
            "family": args.family or "isotropic",
            "mode": mode,
            "initial": spec,
            "p_grid": [args.p or 0.0],
        }
    )
    channel = channel_for(config.family, args.p or 0.0)
    rho = make_initial(spec, noisy_qubit=config.noisy_qubit)
    from .harness import _evolved  # single source of truth for mode handling

    rho = _evolved(channel, rho, mode, config.noisy_qubit)
    if args.counts_in:
        records = read_counts_csv(args.counts_in)
    else:
        records = simulate_counts(rho, standard_settings(), pipeline.n_per_setting, seed=pipeline.seed)
    if args.counts_out:
        counts_out = _resolve_out(args.counts_out)
        counts_out.parent.mkdir(parents=True, exist_ok=True)
        write_counts_csv(records, counts_out)
    fit = reconstruct_state_mle(records, likelihood=pipeline.likelihood)
    estimate = monte_carlo_errors(
        records,
        trials=pipeline.trials,
        estimator="concurrence",
        seed=(pipeline.seed, 1),
        likelihood=pipeline.likelihood,
        base=fit,
    )
    summary = {
        "family": config.family,
        "mode": mode,
        "p": args.p or 0.0,
        "initial": spec.label(),
        "n_per_setting": pipeline.n_per_setting,
        "trials": pipeline.trials,
        "seed": pipeline.seed,
        "concurrence": concurrence(fit.rho_hat).c,
        "error": estimate.std_dev,
        "predicted": analytic_prediction(config, args.p or 0.0, spec),
        "purity": purity(fit.rho_hat),
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "rho": matrix_to_json(fit.rho_hat),
    }
    _write_or_print(json.dumps(summary, indent=2) + "\n", _resolve_out(args.out))
    return 0 if fit.converged else 2


def _cmd_selftest(args) -> int:
    results = run_selftest(fast=not args.full)
    failed = 0
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        print(f"{status}  {name}" + (f"  ({detail})" if detail else ""))
        failed += not passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entdyn",
        description="Entanglement dynamics of qubit pairs under unital noise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, formats=("csv", "json")):
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=formats, default="csv")

    def add_sweep_flags(p, multi=False):
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--family", choices=["two-field", "isotropic", "dephasing"])
        p.add_argument("--mode", choices=["one_sided", "two_sided", "one-sided", "two-sided"])
        if multi:
            p.add_argument(
                "--initial",
                action="append",
                help="initial state (repeatable): bell:phi+, pes:<delta>[:<phi>], mixed:<delta>:<p>",
            )
        else:
            p.add_argument("--initial", help="bell:phi+, pes:<delta>[:<phi>], or mixed:<delta>:<p>")
        p.add_argument("--p-grid", dest="p_grid", help="comma list or start:stop:points")
        p.add_argument("--pipeline", choices=["analytic", "exact", "exact_simulation", "shot-noise", "shot_noise"])
        p.add_argument("--counts", type=int, help="pairs per setting for shot noise")
        p.add_argument("--trials", type=int, help="Monte Carlo trials for error bars")
        p.add_argument("--seed", type=int)
        p.add_argument("--likelihood", choices=["gaussian", "poisson"])
        p.add_argument("--noisy-qubit", dest="noisy_qubit", type=int, choices=[0, 1])
        p.add_argument("--p-scale", dest="p_scale", type=float,
                       help="stretch predicted curves' noise axis (figure comparison only)")

    p = sub.add_parser("sweep", help="concurrence vs noise probability")
    add_sweep_flags(p)
    add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("pes-sweep", help="sweeps for partially entangled initial states")
    add_sweep_flags(p, multi=True)
    add_common(p)
    p.set_defaults(func=_cmd_pes_sweep)

    p = sub.add_parser("breaking-points", help="entanglement-breaking probabilities")
    add_common(p)
    p.set_defaults(func=_cmd_breaking_points)

    p = sub.add_parser("characterize", help="process-matrix eigenvalue curves vs theory")
    p.add_argument("--family", choices=["two-field", "isotropic", "dephasing"], required=True)
    p.add_argument("--p-grid", dest="p_grid", help="comma list or start:stop:points")
    p.add_argument("--counts", type=int, help="counts per projector (omit for exact probes)")
    p.add_argument("--seed", type=int)
    add_common(p)
    p.set_defaults(func=_cmd_characterize)

    p = sub.add_parser("ellipsoid", help="mapped Bloch-sphere mesh points")
    p.add_argument("--family", choices=["two-field", "isotropic", "dephasing"], default="isotropic")
    p.add_argument("--p", type=float)
    p.add_argument("--channel", help="JSON channel description file (overrides family/p)")
    p.add_argument("--n-theta", dest="n_theta", type=int, default=25)
    p.add_argument("--n-phi", dest="n_phi", type=int, default=50)
    add_common(p)
    p.set_defaults(func=_cmd_ellipsoid)

    p = sub.add_parser("tomo-sim", help="simulate counts, reconstruct, report concurrence")
    p.add_argument("--family", choices=["two-field", "isotropic", "dephasing"])
    p.add_argument("--mode", choices=["one_sided", "two_sided", "one-sided", "two-sided"])
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--initial", help="bell:phi+, pes:<delta>[:<phi>], or mixed:<delta>:<p>")
    p.add_argument("--counts", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--likelihood", choices=["gaussian", "poisson"])
    p.add_argument("--counts-out", dest="counts_out", help="also write the simulated counts CSV here")
    p.add_argument("--counts-in", dest="counts_in", help="reconstruct from this counts CSV instead of simulating")
    p.add_argument("--out", help="summary JSON path (stdout if omitted)")
    p.set_defaults(func=_cmd_tomo_sim)

    p = sub.add_parser("selftest", help="run the quick property battery")
    p.add_argument("--full", action="store_true", help="full-size sample counts")
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
