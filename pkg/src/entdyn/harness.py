"""Sweep orchestration: concurrence-vs-noise curves, breaking points, channel
characterization tables, and deterministic CSV/JSON emission.

A sweep walks a grid of noise probabilities, applies the channel family to
the initial state one- or two-sided, and computes the output concurrence
through one of three pipelines:

* ``analytic``          evaluate the closed-form law directly,
* ``exact_simulation``  evolve the density matrix and take the concurrence,
* ``shot_noise``        simulate Poissonian coincidence counts, reconstruct
                        by maximum likelihood, and attach a bootstrap error.

Every row also carries the analytic prediction so pipelines can be compared
against theory point by point.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import (
    PAULI_FAMILIES,
    apply_one_sided,
    apply_two_sided,
    channel_for,
    channel_radii,
    dephasing_channel,
)
from .dynamics import (
    MODES,
    InitialStateSpec,
    breaking_point,
    concurrence,
    factorization_prediction,
    make_initial,
    mixed_evolution_prediction,
    predict_one_sided,
    predict_two_sided,
    pure_pes_ket,
)
from .states import dm
from .tomography import (
    monte_carlo_errors,
    process_tomography_single_qubit,
    reconstruct_state_mle,
    simulate_counts,
    simulate_probe_outputs,
    standard_settings,
)

#: Environment variable naming the default directory for relative output paths.
ENV_OUTDIR = "ENTDYN_OUTDIR"

PIPELINES = ("analytic", "exact_simulation", "shot_noise")

DEFAULT_P_GRID = tuple(round(0.05 * i, 2) for i in range(21))


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or produce a usable result."""


@dataclass(frozen=True)
class Pipeline:
    kind: str = "analytic"
    n_per_setting: int = 10_000
    trials: int = 50
    seed: int = 0
    likelihood: str = "gaussian"


@dataclass(frozen=True)
class SweepConfig:
    family: str = "isotropic"
    mode: str = "one_sided"
    initial: InitialStateSpec = field(default_factory=lambda: InitialStateSpec(kind="bell"))
    p_grid: tuple = DEFAULT_P_GRID
    pipeline: Pipeline = field(default_factory=Pipeline)
    noisy_qubit: int = 1
    p_scale: float | None = None
    initials: tuple | None = None  # extra initial states for PES sweeps


@dataclass(frozen=True)
class SweepRow:
    p: float
    concurrence: float
    error: float | None
    predicted: float


@dataclass(frozen=True)
class BreakingPoint:
    family: str
    mode: str
    p_star: float


@dataclass(frozen=True)
class CharacterizationRow:
    """Process-matrix diagonal vs theory at one noise setting."""

    p: float
    chi: tuple
    theory: tuple


def validate_sweep_config(config: SweepConfig) -> None:
    if config.family not in PAULI_FAMILIES:
        raise ConfigError(f"family: unknown family {config.family!r}; expected one of {PAULI_FAMILIES}")
    if config.mode not in MODES:
        raise ConfigError(f"mode: expected one of {MODES}, got {config.mode!r}")
    if config.noisy_qubit not in (0, 1):
        raise ConfigError(f"noisy_qubit: expected 0 or 1, got {config.noisy_qubit!r}")
    if not config.p_grid:
        raise ConfigError("p_grid: must not be empty")
    for i, p in enumerate(config.p_grid):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"p_grid[{i}]: value {p!r} outside [0, 1]")
        if i > 0 and p <= config.p_grid[i - 1]:
            raise ConfigError(f"p_grid[{i}]: values must be strictly increasing")
    pl = config.pipeline
    if pl.kind not in PIPELINES:
        raise ConfigError(f"pipeline.kind: expected one of {PIPELINES}, got {pl.kind!r}")
    if pl.n_per_setting < 1:
        raise ConfigError(f"pipeline.n_per_setting: must be >= 1, got {pl.n_per_setting!r}")
    if pl.trials < 2:
        raise ConfigError(f"pipeline.trials: must be >= 2, got {pl.trials!r}")
    if pl.likelihood not in ("gaussian", "poisson"):
        raise ConfigError(f"pipeline.likelihood: expected 'gaussian' or 'poisson', got {pl.likelihood!r}")
    if config.p_scale is not None and config.p_scale <= 0:
        raise ConfigError(f"p_scale: must be positive, got {config.p_scale!r}")
    for label, spec in _named_initials(config):
        if not isinstance(spec, InitialStateSpec):
            raise ConfigError(f"{label}: expected an InitialStateSpec, got {type(spec).__name__}")
        if spec.kind == "mixed_pes" and not 0.0 <= spec.dephasing <= 1.0:
            raise ConfigError(f"{label}.dephasing: value {spec.dephasing!r} outside [0, 1]")


def _named_initials(config: SweepConfig):
    if config.initials:
        return [(f"initials[{i}]", s) for i, s in enumerate(config.initials)]
    return [("initial", config.initial)]


def _evolved(channel, rho0, mode: str, noisy_qubit: int) -> np.ndarray:
    if mode == "one_sided":
        return apply_one_sided(channel, rho0, target=noisy_qubit)
    return apply_two_sided(channel, rho0)


def _law_prediction(spec: InitialStateSpec, channel, mode: str, noisy_qubit: int) -> float:
    """Analytic concurrence prediction; falls back to exact density-matrix
    evolution when no closed form covers the configuration (non-maximally
    entangled initial state under two-sided noise)."""
    radii = channel_radii(channel)
    if mode == "one_sided":
        if spec.kind == "bell":
            return predict_one_sided(radii)
        if spec.kind == "pure_pes":
            return factorization_prediction(make_initial(spec), channel)
        sigma = dm(pure_pes_ket(spec.delta, 0.0))
        return mixed_evolution_prediction(sigma, dephasing_channel(spec.dephasing), channel)
    if spec.kind == "bell":
        return predict_two_sided(radii)
    rho = make_initial(spec, noisy_qubit=noisy_qubit)
    return concurrence(_evolved(channel, rho, mode, noisy_qubit)).c


def analytic_prediction(config: SweepConfig, p: float, spec: InitialStateSpec | None = None) -> float:
    """Prediction attached to a sweep row.

    ``p_scale`` stretches the prediction's noise axis (theory evaluated at
    p / p_scale) for comparison against figures whose measured breaking point
    sits beyond the ideal one; it never touches simulated values.
    """
    spec = config.initial if spec is None else spec
    p_eff = p if config.p_scale is None else min(1.0, p / config.p_scale)
    channel = channel_for(config.family, p_eff)
    return _law_prediction(spec, channel, config.mode, config.noisy_qubit)


def _sweep_rows(config: SweepConfig, spec: InitialStateSpec) -> list[SweepRow]:
    rows = []
    pl = config.pipeline
    rho0 = make_initial(spec, noisy_qubit=config.noisy_qubit)
    for i, p in enumerate(config.p_grid):
        channel = channel_for(config.family, p)
        predicted = analytic_prediction(config, p, spec)
        if pl.kind == "analytic":
            c = _law_prediction(spec, channel, config.mode, config.noisy_qubit)
            error = None
        elif pl.kind == "exact_simulation":
            c = concurrence(_evolved(channel, rho0, config.mode, config.noisy_qubit)).c
            error = None
        else:
            rho = _evolved(channel, rho0, config.mode, config.noisy_qubit)
            records = simulate_counts(
                rho, standard_settings(), pl.n_per_setting, seed=(pl.seed, i, 0)
            )
            base = reconstruct_state_mle(records, likelihood=pl.likelihood)
            estimate = monte_carlo_errors(
                records,
                trials=pl.trials,
                estimator="concurrence",
                seed=(pl.seed, i, 1),
                likelihood=pl.likelihood,
                base=base,
            )
            c = concurrence(base.rho_hat).c
            error = estimate.std_dev
        rows.append(SweepRow(p=float(p), concurrence=float(c), error=error, predicted=float(predicted)))
    return rows


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    """Concurrence versus noise probability for one initial state."""
    validate_sweep_config(config)
    return _sweep_rows(config, config.initial)


def run_pes_sweep(config: SweepConfig) -> dict[str, list[SweepRow]]:
    """Sweeps for a set of partially-entangled initial states, keyed by label.

    Uses ``config.initials`` when given, else the single ``config.initial``.
    Pure PES rows get factorization-law predictions, mixed PES rows the
    composed-channel law.
    """
    validate_sweep_config(config)
    specs = config.initials if config.initials else (config.initial,)
    return {spec.label(): _sweep_rows(config, spec) for spec in specs}


def run_breaking_points() -> list[BreakingPoint]:
    """Entanglement-breaking probability for each family/side combination."""
    out = []
    for family in ("two-field", "isotropic"):
        for mode in MODES:
            out.append(BreakingPoint(family=family, mode=mode, p_star=breaking_point(family, mode)))
    return out


def run_channel_characterization(
    family: str,
    p_grid=DEFAULT_P_GRID,
    n_per_probe: int | None = None,
    seed: int = 0,
) -> list[CharacterizationRow]:
    """Reconstructed process-matrix diagonal against theory over a noise grid.

    Probe outputs are exact unless ``n_per_probe`` switches on shot noise.
    For these channels the process matrix is diagonal in the Pauli basis, so
    the diagonal entries are its eigenvalue curves.
    """
    if family not in PAULI_FAMILIES:
        raise ConfigError(f"family: unknown family {family!r}; expected one of {PAULI_FAMILIES}")
    rows = []
    for i, p in enumerate(p_grid):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"p_grid[{i}]: value {p!r} outside [0, 1]")
        channel = channel_for(family, p)
        probes = simulate_probe_outputs(
            channel,
            n_per_projector=n_per_probe,
            seed=None if n_per_probe is None else (seed, i),
        )
        chi = process_tomography_single_qubit(probes)
        rows.append(
            CharacterizationRow(
                p=float(p),
                chi=tuple(float(x) for x in np.diag(chi).real),
                theory=tuple(float(x) for x in channel.chi_diag),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Emission


def _row_cells(row) -> list:
    if isinstance(row, SweepRow):
        return [row.p, row.concurrence, row.error, row.predicted]
    if isinstance(row, BreakingPoint):
        return [row.family, row.mode, row.p_star]
    if isinstance(row, CharacterizationRow):
        return [row.p, *row.chi, *row.theory]
    raise ValueError(f"cannot emit rows of type {type(row).__name__}")


def _headers(row) -> list[str]:
    if isinstance(row, SweepRow):
        return ["p", "concurrence", "error", "predicted"]
    if isinstance(row, BreakingPoint):
        return ["family", "mode", "p_star"]
    if isinstance(row, CharacterizationRow):
        return ["p", "chi_0", "chi_1", "chi_2", "chi_3", "theory_0", "theory_1", "theory_2", "theory_3"]
    raise ValueError(f"cannot emit rows of type {type(row).__name__}")


def _cell_csv(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def _cell_json(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render(rows, format: str = "csv") -> str:
    """Deterministic text rendering of a row table (same input, same bytes)."""
    rows = list(rows)
    if not rows:
        raise ValueError("rows must be non-empty")
    headers = _headers(rows[0])
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([_cell_csv(v) for v in _row_cells(row)])
        return buf.getvalue()
    if format == "json":
        payload = [
            {k: _cell_json(v) for k, v in zip(headers, _row_cells(row))} for row in rows
        ]
        return json.dumps(payload, indent=2) + "\n"
    raise ValueError(f"format must be 'csv' or 'json', got {format!r}")


def emit(rows, format: str, path) -> None:
    """Write a row table to ``path`` (CSV header: p,concurrence,error,predicted)."""
    text = render(rows, format)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_rows(path, format: str = "json") -> list[SweepRow]:
    """Read sweep rows back from an emitted file."""
    if format == "json":
        with open(path) as fh:
            payload = json.load(fh)
        return [
            SweepRow(
                p=float(r["p"]),
                concurrence=float(r["concurrence"]),
                error=None if r["error"] is None else float(r["error"]),
                predicted=float(r["predicted"]),
            )
            for r in payload
        ]
    if format == "csv":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            return [
                SweepRow(
                    p=float(r["p"]),
                    concurrence=float(r["concurrence"]),
                    error=None if r["error"] == "" else float(r["error"]),
                    predicted=float(r["predicted"]),
                )
                for r in reader
            ]
    raise ValueError(f"format must be 'csv' or 'json', got {format!r}")


# ---------------------------------------------------------------------------
# Configuration parsing (JSON file / CLI)


def initial_spec_from(obj) -> InitialStateSpec:
    """Parse an initial-state recipe from a mapping or compact string.

    Strings: ``bell:phi+``, ``pes:<delta>[:<phi>]``, ``mixed:<delta>:<p>``
    (angles in radians).
    """
    if isinstance(obj, InitialStateSpec):
        return obj
    if isinstance(obj, str):
        parts = obj.split(":")
        try:
            if parts[0] == "bell":
                return InitialStateSpec(kind="bell", bell=_bell_key(parts[1] if len(parts) > 1 else "phi+"))
            if parts[0] in ("pes", "pure_pes"):
                return InitialStateSpec(
                    kind="pure_pes",
                    delta=float(parts[1]),
                    phi=float(parts[2]) if len(parts) > 2 else 0.0,
                )
            if parts[0] in ("mixed", "mixed_pes"):
                return InitialStateSpec(kind="mixed_pes", delta=float(parts[1]), dephasing=float(parts[2]))
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"initial: cannot parse {obj!r} ({exc})") from exc
        raise ConfigError(f"initial: unknown kind {parts[0]!r}")
    if isinstance(obj, dict):
        kind = obj.get("kind")
        try:
            if kind == "bell":
                return InitialStateSpec(kind="bell", bell=_bell_key(obj.get("bell", "phi_plus")))
            if kind == "pure_pes":
                return InitialStateSpec(
                    kind="pure_pes", delta=float(obj["delta"]), phi=float(obj.get("phi", 0.0))
                )
            if kind == "mixed_pes":
                return InitialStateSpec(
                    kind="mixed_pes", delta=float(obj["delta"]), dephasing=float(obj["dephasing"])
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"initial.{exc}: missing or malformed field") from exc
        raise ConfigError(f"initial.kind: unknown kind {kind!r}")
    raise ConfigError(f"initial: expected a mapping or string, got {type(obj).__name__}")


def _bell_key(name: str) -> str:
    return name.strip().lower().replace("+", "_plus").replace("-", "_minus")


def _parse_p_grid(obj) -> tuple:
    if isinstance(obj, dict):
        try:
            return tuple(
                float(x)
                for x in np.linspace(float(obj["start"]), float(obj["stop"]), int(obj["points"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"p_grid: malformed range object ({exc})") from exc
    try:
        return tuple(float(x) for x in obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"p_grid: expected numbers, got {obj!r}") from exc


def pipeline_from(obj) -> Pipeline:
    if isinstance(obj, Pipeline):
        return obj
    if isinstance(obj, str):
        kind = {"exact": "exact_simulation", "shot-noise": "shot_noise"}.get(obj, obj)
        return Pipeline(kind=kind)
    if isinstance(obj, dict):
        known = {"kind", "n_per_setting", "trials", "seed", "likelihood"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"pipeline.{sorted(unknown)[0]}: unknown field")
        base = Pipeline()
        kind = obj.get("kind", base.kind)
        kind = {"exact": "exact_simulation", "shot-noise": "shot_noise"}.get(kind, kind)
        return Pipeline(
            kind=kind,
            n_per_setting=int(obj.get("n_per_setting", base.n_per_setting)),
            trials=int(obj.get("trials", base.trials)),
            seed=int(obj.get("seed", base.seed)),
            likelihood=obj.get("likelihood", base.likelihood),
        )
    raise ConfigError(f"pipeline: expected a mapping or string, got {type(obj).__name__}")


def sweep_config_from_dict(obj: dict) -> SweepConfig:
    """Build and validate a sweep configuration from a JSON-style mapping."""
    if not isinstance(obj, dict):
        raise ConfigError(f"config: expected a mapping, got {type(obj).__name__}")
    known = {"family", "mode", "initial", "initials", "p_grid", "pipeline", "noisy_qubit", "p_scale"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown field")
    base = SweepConfig()
    config = replace(
        base,
        family=obj.get("family", base.family),
        mode=obj.get("mode", base.mode),
        initial=initial_spec_from(obj.get("initial", base.initial)),
        p_grid=_parse_p_grid(obj["p_grid"]) if "p_grid" in obj else base.p_grid,
        pipeline=pipeline_from(obj.get("pipeline", base.pipeline)),
        noisy_qubit=int(obj.get("noisy_qubit", base.noisy_qubit)),
        p_scale=None if obj.get("p_scale") is None else float(obj["p_scale"]),
        initials=(
            tuple(initial_spec_from(x) for x in obj["initials"]) if obj.get("initials") else None
        ),
    )
    validate_sweep_config(config)
    return config


# ---------------------------------------------------------------------------
# Self-test battery (quick versions of the verification suite)


def run_selftest(fast: bool = True, seed: int = 20260808) -> list[tuple[str, bool, str]]:
    """Run the property battery; returns (name, passed, detail) triples."""
    from .dynamics import lambda_two_sided
    from .sampling import random_pauli_channel, random_pure_ket, random_unital_channel
    from .states import bell_state, fidelity
    from .tomography import CountRecord, born_probability

    rng = np.random.default_rng(seed)
    results = []

    def check(name, passed, detail=""):
        results.append((name, bool(passed), detail))

    bell = bell_state("phi_plus")
    grid = [0.05 * i for i in range(21)]

    worst = 0.0
    for family in ("two-field", "isotropic"):
        for p in grid:
            rho = apply_one_sided(channel_for(family, p), bell, target=1)
            worst = max(worst, abs(concurrence(rho).c - max(1.0 - 2.0 * p, 0.0)))
    check("one-sided law on Bell pair", worst < 1e-9, f"max deviation {worst:.2e}")

    n = 100 if fast else 1000
    worst = 0.0
    for _ in range(n):
        channel = random_pauli_channel(rng)
        lam = np.sort(lambda_two_sided(channel))[::-1]
        num = concurrence(apply_two_sided(channel, bell)).lambdas
        worst = max(worst, float(np.max(np.abs(lam - num))))
    check("two-sided spectrum closed form", worst < 1e-10, f"max deviation {worst:.2e} over {n}")

    expected = {
        ("two-field", "one_sided"): 0.5,
        ("two-field", "two_sided"): 1.0 / 3.0,
        ("isotropic", "one_sided"): 0.5,
        ("isotropic", "two_sided"): (3.0 - math.sqrt(3.0)) / 4.0,
    }
    worst = max(
        abs(bp.p_star - expected[(bp.family, bp.mode)]) for bp in run_breaking_points()
    )
    check("breaking points", worst < 1e-6, f"max deviation {worst:.2e}")

    n = 10_000 if fast else 100_000
    samples = rng.uniform(-1.0, 1.0, size=(n, 3))
    from .channels import chi_from_radii, is_completely_positive

    disagreements = sum(
        is_completely_positive(r) != (chi_from_radii(r).min() >= -1e-12) for r in samples
    )
    check("CP tetrahedron vs chi oracle", disagreements == 0, f"{disagreements} disagreements in {n}")

    n = 10 if fast else 100
    worst = 0.0
    for _ in range(n):
        psi = random_pure_ket(rng, 4)
        channel = random_pauli_channel(rng)
        rho0 = np.outer(psi, psi.conj())
        direct = concurrence(apply_one_sided(channel, rho0, target=1)).c
        worst = max(worst, abs(factorization_prediction(rho0, channel) - direct))
    check("factorization law", worst < 1e-9, f"max deviation {worst:.2e} over {n}^2 pairs")

    n = 100 if fast else 1000
    singlet = bell_state("psi_minus")
    worst_eq, worst_bound = 0.0, -1.0
    for _ in range(n):
        channel = random_unital_channel(rng)
        pred = predict_two_sided(channel.radii)
        worst_eq = max(worst_eq, abs(concurrence(apply_two_sided(channel, singlet)).c - pred))
        worst_bound = max(worst_bound, concurrence(apply_two_sided(channel, bell)).c - pred)
    check("singlet equality", worst_eq < 1e-9, f"max deviation {worst_eq:.2e}")
    check("two-sided upper bound", worst_bound <= 1e-10, f"max excess {worst_bound:.2e}")

    n_counts = 2000
    records = [
        CountRecord(s, int(round(n_counts * born_probability(bell, s))), float(n_counts))
        for s in standard_settings()
    ]
    fit = reconstruct_state_mle(records)
    fid = fidelity(fit.rho_hat, bell)
    check("tomography reconstruction", fid > 0.999, f"noiseless fidelity {fid:.6f}")

    return results
