"""Command-line interface.

Subcommands `spectrum`, `response`, and `rcurve` execute sweeps and write a
CSV table plus a flat key=value manifest holding every resolved parameter;
`probe` solves a single operating point and prints its observables.  Each
report also renders a quick-look figure next to the CSV unless --no-plot is
given.  Identical configurations produce byte-identical CSV files, serially
or in parallel.
"""
from __future__ import annotations

import argparse
import cmath
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .model import DriveMap, SystemParams, drive_from_input
from .observables import g_from_cooperativity
from .steady import SteadyStateError, TruncationPolicy, adaptive_truncation
from .observables import compute_observables
from .sweeps import (
    RcurveRow,
    SweepResult,
    SweepSpec,
    default_rcurve_grid,
    default_response_grid,
    default_spectrum_grid,
    run_rcurve,
    run_response,
    run_spectrum,
)

SUBCOMMANDS = ("spectrum", "response", "rcurve", "probe")

_FLOAT_KEYS = (
    "g", "C", "epsilon", "Delta_1", "Delta_c", "Delta_p", "kappa_A", "kappa_B",
    "Gamma_31", "Gamma_32", "gamma_2", "gamma_3", "growth", "rel_tol", "tail_tol",
)
_COMPLEX_KEYS = ("Omega_p", "Omega_c", "c_p", "c_c")
_INT_KEYS = ("N_start", "N_max", "workers")
_GRID_KEYS = ("grid", "response_grid")
_STR_KEYS = ("subcommand",)
# manifest-only diagnostics, accepted and skipped so a manifest re-runs as-is
_INFO_KEYS = ("package", "residual_tol", "trace_tol", "hermiticity_tol", "positivity_tol")
_KNOWN_KEYS = _FLOAT_KEYS + _COMPLEX_KEYS + _INT_KEYS + _GRID_KEYS + _STR_KEYS + _INFO_KEYS

SPECTRUM_COLUMNS = ("delta_p", "n_intracavity", "n_out", "g2_zero", "absorption", "fock_n", "residual", "error")
RESPONSE_COLUMNS = ("epsilon_sq", "n_intracavity", "n_out", "g2_zero", "absorption", "fock_n", "residual", "error")
RCURVE_COLUMNS = ("C", "R1", "R2", "R2_defined", "error")


class ConfigError(ValueError):
    pass


def _parse_float(raw: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: not a number: {raw!r}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"{where}: value must be finite, got {raw!r}")
    return value


def _parse_complex(raw: str, where: str) -> complex:
    try:
        value = complex(raw.replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"{where}: not a complex number: {raw!r}") from exc
    if not cmath.isfinite(value):
        raise ConfigError(f"{where}: value must be finite, got {raw!r}")
    return value


def _parse_int(raw: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: not an integer: {raw!r}") from exc


def _parse_grid(raw: str, where: str) -> tuple[float, ...]:
    """Grids are either explicit comma lists or start:stop:count ranges."""
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{where}: grid ranges use start:stop:count, got {raw!r}")
        start = _parse_float(parts[0], where)
        stop = _parse_float(parts[1], where)
        count = _parse_int(parts[2], where)
        if count < 2 or stop <= start:
            raise ConfigError(f"{where}: found malformed grid range {raw!r}")
        step = (stop - start) / (count - 1)
        values = tuple(start + step * i for i in range(count - 1)) + (stop,)
    else:
        try:
            values = tuple(float(tok) for tok in raw.split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"{where}: found malformed grid list {raw!r}") from exc
    if len(values) < 2:
        raise ConfigError(f"{where}: grid needs at least 2 points")
    if any(not math.isfinite(v) for v in values):
        raise ConfigError(f"{where}: grid values must be finite")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{where}: grid must be strictly increasing")
    return values


def _parse_entry(key: str, raw: str, where: str, overrides: dict) -> None:
    if key.startswith("point."):
        return
    if key in _INFO_KEYS:
        return
    if key not in _KNOWN_KEYS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    if key in overrides:
        raise ConfigError(f"{where}: duplicate key {key!r}")
    if key in _FLOAT_KEYS:
        overrides[key] = _parse_float(raw, where)
    elif key in _COMPLEX_KEYS:
        overrides[key] = _parse_complex(raw, where)
    elif key in _INT_KEYS:
        overrides[key] = _parse_int(raw, where)
    elif key in _GRID_KEYS:
        overrides[key] = _parse_grid(raw, where)
    else:
        overrides[key] = raw.strip()


def parse_config(text: str) -> dict:
    """Parse a key = value document into typed overrides.

    Lines are `key = value`, blank, or # comments.  Unknown keys, duplicate
    keys, non-finite values, and malformed grids are rejected with the
    offending key and line number.
    """
    overrides: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        _parse_entry(key.strip(), raw.strip(), f"line {lineno}", overrides)
    return overrides


def parse_set_overrides(pairs: list[str]) -> dict:
    overrides: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        _parse_entry(key.strip(), raw.strip(), f"--set {key.strip()}", overrides)
    return overrides


@dataclass
class RunConfig:
    subcommand: str
    params: SystemParams
    drive: DriveMap
    policy: TruncationPolicy
    grid: tuple[float, ...]
    response_grid: tuple[float, ...] | None
    epsilon: float
    workers: int
    explicit: frozenset
    out: Path | None
    plot: bool


def resolve_config(
    subcommand: str,
    overrides: dict,
    out: Path | None = None,
    workers: int | None = None,
    fock_max: int | None = None,
    plot: bool = True,
) -> RunConfig:
    """Fill defaults around the overrides and build a fully resolved run.

    Defaults: symmetric cavity, Gamma_31 = Gamma_32 = 1/2, Delta_1 = Delta_c = 0,
    Delta_p tied to 1.1 g, drive map Omega_c = 8 eps and Omega_p = -0.8i sqrt(kappa_A) eps,
    no dephasing.  Cooperativity C may be given instead of g.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    declared = overrides.get("subcommand")
    if declared is not None and declared != subcommand:
        raise ConfigError(f"config declares subcommand {declared!r}, command line says {subcommand!r}")

    explicit = frozenset(k for k in overrides if k != "subcommand")

    gamma_31 = overrides.get("Gamma_31", 0.5)
    gamma_32 = overrides.get("Gamma_32", 0.5)
    gamma_total = gamma_31 + gamma_32

    if "g" in overrides and "C" in overrides:
        raise ConfigError("set either g or C, not both")
    if "C" in overrides:
        if gamma_total <= 0:
            raise ConfigError("C requires Gamma_31 + Gamma_32 > 0")
        g = g_from_cooperativity(overrides["C"], gamma_total)
    else:
        g = overrides.get("g", 20.0)

    if "kappa_A" in overrides and "kappa_B" in overrides:
        kappa_a, kappa_b = overrides["kappa_A"], overrides["kappa_B"]
    elif "kappa_A" in overrides:
        kappa_a = overrides["kappa_A"]
        kappa_b = 1.0 - kappa_a
    elif "kappa_B" in overrides:
        kappa_b = overrides["kappa_B"]
        kappa_a = 1.0 - kappa_b
    else:
        kappa_a = kappa_b = 0.5

    delta_p = overrides.get("Delta_p", 1.1 * g)
    epsilon = overrides.get("epsilon", 1.0)
    if epsilon < 0:
        raise ConfigError("epsilon must be >= 0")

    drive = DriveMap(
        c_p=overrides.get("c_p", -0.8j * math.sqrt(kappa_a)),
        c_c=overrides.get("c_c", 8.0 + 0.0j),
    )

    if subcommand != "probe" and ("Omega_p" in overrides or "Omega_c" in overrides):
        raise ConfigError(
            "sweeps derive Omega_p and Omega_c from the drive map; override c_p or c_c instead"
        )
    if subcommand == "probe":
        omega_p, omega_c = drive_from_input(epsilon, drive)
        omega_p = overrides.get("Omega_p", omega_p)
        omega_c = overrides.get("Omega_c", omega_c)
    else:
        omega_p = omega_c = 0.0j

    try:
        params = SystemParams(
            g=g,
            Omega_c=omega_c,
            Omega_p=omega_p,
            Delta_1=overrides.get("Delta_1", 0.0),
            Delta_c=overrides.get("Delta_c", 0.0),
            Delta_p=delta_p,
            kappa_A=kappa_a,
            kappa_B=kappa_b,
            Gamma_31=gamma_31,
            Gamma_32=gamma_32,
            gamma_2=overrides.get("gamma_2", 0.0),
            gamma_3=overrides.get("gamma_3", 0.0),
        )
        policy = TruncationPolicy(
            N_start=overrides.get("N_start", 8),
            growth=overrides.get("growth", 1.5),
            rel_tol=overrides.get("rel_tol", 1e-4),
            tail_tol=overrides.get("tail_tol", 1e-6),
            N_max=fock_max if fock_max is not None else overrides.get("N_max", 120),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if "grid" in overrides:
        grid = overrides["grid"]
    elif subcommand == "spectrum":
        grid = default_spectrum_grid()
    elif subcommand == "response":
        grid = default_response_grid()
    elif subcommand == "rcurve":
        grid = default_rcurve_grid()
    else:
        grid = ()

    resolved_workers = workers if workers is not None else overrides.get("workers", 1)
    if resolved_workers < 1:
        raise ConfigError("workers must be >= 1")

    return RunConfig(
        subcommand=subcommand,
        params=params,
        drive=drive,
        policy=policy,
        grid=grid,
        response_grid=overrides.get("response_grid"),
        epsilon=epsilon,
        workers=resolved_workers,
        explicit=explicit,
        out=out,
        plot=plot,
    )


def _fmt(value) -> str:
    """Shortest round-trip decimal for binary64; plain text otherwise."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, complex):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def build_spec(config: RunConfig) -> SweepSpec:
    if config.subcommand == "spectrum":
        return SweepSpec(
            kind="spectrum", base=config.params, drive=config.drive,
            grid=config.grid, policy=config.policy, epsilon=config.epsilon,
        )
    if config.subcommand == "response":
        return SweepSpec(
            kind="response", base=config.params, drive=config.drive,
            grid=config.grid, policy=config.policy,
        )
    if config.subcommand == "rcurve":
        return SweepSpec(
            kind="rcurve", base=config.params, drive=config.drive,
            grid=config.grid, policy=config.policy,
            response_grid=config.response_grid,
            delta_p_override=config.params.Delta_p if "Delta_p" in config.explicit else None,
        )
    raise ConfigError(f"{config.subcommand} does not run sweeps")


def write_csv(path: Path, result: SweepResult) -> None:
    if result.kind == "spectrum":
        columns = SPECTRUM_COLUMNS
    elif result.kind == "response":
        columns = RESPONSE_COLUMNS
    else:
        columns = RCURVE_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in result.rows:
            if result.kind == "rcurve":
                writer.writerow([
                    _fmt(row.control), _fmt(row.r1), _fmt(row.r2),
                    _fmt(row.r2_defined), row.error or "",
                ])
            else:
                obs = row.obs
                writer.writerow([
                    _fmt(row.control),
                    _fmt(obs.n_intracavity if obs else None),
                    _fmt(obs.n_out if obs else None),
                    _fmt(obs.g2_zero if obs else None),
                    _fmt(obs.absorption if obs else None),
                    _fmt(row.fock_n),
                    _fmt(row.residual),
                    row.error or "",
                ])


def manifest_entries(config: RunConfig, result: SweepResult | None) -> list[tuple[str, str]]:
    """Every resolved parameter and tolerance, in a fixed order.

    The manifest doubles as a config: feeding it back through --config
    reproduces the CSV byte for byte.  Parameters that are re-derived per
    point (g and Delta_p in rcurve runs) are only recorded when the user
    pinned them explicitly.
    """
    p = config.params
    entries: list[tuple[str, str]] = [
        ("subcommand", config.subcommand),
        ("package", f"lambdacav {__version__}"),
    ]
    tied_rcurve = config.subcommand == "rcurve"
    if not tied_rcurve or "g" in config.explicit:
        entries.append(("g", _fmt(p.g)))
    if not tied_rcurve or "Delta_p" in config.explicit:
        entries.append(("Delta_p", _fmt(p.Delta_p)))
    if config.subcommand in ("spectrum", "probe"):
        entries.append(("epsilon", _fmt(config.epsilon)))
    entries += [
        ("Delta_1", _fmt(p.Delta_1)),
        ("Delta_c", _fmt(p.Delta_c)),
        ("kappa_A", _fmt(p.kappa_A)),
        ("kappa_B", _fmt(p.kappa_B)),
        ("Gamma_31", _fmt(p.Gamma_31)),
        ("Gamma_32", _fmt(p.Gamma_32)),
        ("gamma_2", _fmt(p.gamma_2)),
        ("gamma_3", _fmt(p.gamma_3)),
        ("c_p", _fmt(complex(config.drive.c_p))),
        ("c_c", _fmt(complex(config.drive.c_c))),
    ]
    if config.subcommand == "probe":
        entries += [("Omega_p", _fmt(complex(p.Omega_p))), ("Omega_c", _fmt(complex(p.Omega_c)))]
    entries += [
        ("N_start", _fmt(config.policy.N_start)),
        ("growth", _fmt(config.policy.growth)),
        ("rel_tol", _fmt(config.policy.rel_tol)),
        ("tail_tol", _fmt(config.policy.tail_tol)),
        ("N_max", _fmt(config.policy.N_max)),
        ("workers", _fmt(config.workers)),
        ("residual_tol", _fmt(1e-10)),
        ("trace_tol", _fmt(1e-12)),
        ("hermiticity_tol", _fmt(1e-10)),
        ("positivity_tol", _fmt(-1e-8)),
    ]
    if config.grid:
        entries.append(("grid", _fmt(config.grid)))
    if config.response_grid is not None:
        entries.append(("response_grid", _fmt(config.response_grid)))
    if result is not None:
        for i, row in enumerate(result.rows):
            if isinstance(row, RcurveRow):
                entries.append((f"point.{i}.C", _fmt(row.control)))
                entries.append((f"point.{i}.R1_defined", _fmt(row.r1_defined)))
                entries.append((f"point.{i}.max_fock_n", _fmt(row.max_fock_n)))
                entries.append((f"point.{i}.max_residual", _fmt(row.max_residual)))
                if row.nested_manifest is not None:
                    nested_grid = row.nested_manifest.get("grid", ())
                    entries.append((f"point.{i}.response_points", _fmt(len(nested_grid))))
                    entries.append((f"point.{i}.response_upper", _fmt(nested_grid[-1] if nested_grid else None)))
            else:
                entries.append((f"point.{i}.fock_n", _fmt(row.fock_n)))
                entries.append((f"point.{i}.residual", _fmt(row.residual)))
            if row.error:
                entries.append((f"point.{i}.error", row.error))
    return entries


def write_manifest(path: Path, config: RunConfig, result: SweepResult | None) -> None:
    lines = [f"{key} = {value}" for key, value in manifest_entries(config, result)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_probe(config: RunConfig) -> int:
    try:
        dm = adaptive_truncation(config.params, config.policy)
    except SteadyStateError as exc:
        print(f"probe failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    obs = compute_observables(dm, config.params)
    lines = [
        f"n_intracavity = {_fmt(obs.n_intracavity)}",
        f"n_out = {_fmt(obs.n_out)}",
        f"g2_zero = {_fmt(obs.g2_zero)}",
        f"absorption = {_fmt(obs.absorption)}",
        f"fock_n = {dm.trunc_used.n_max if dm.trunc_used else ''}",
        f"residual = {_fmt(dm.residual)}",
    ]
    text = "\n".join(lines)
    print(text)
    if config.out is not None:
        config.out.write_text(text + "\n", encoding="utf-8")
    return 0


def run(config: RunConfig) -> int:
    """Execute the configured run; returns the process exit status."""
    if config.subcommand == "probe":
        return run_probe(config)
    if config.out is None:
        raise ConfigError(f"{config.subcommand} needs --out for the CSV report")
    spec = build_spec(config)
    if config.subcommand == "spectrum":
        result = run_spectrum(spec, workers=config.workers)
    elif config.subcommand == "response":
        result = run_response(spec, workers=config.workers)
    else:
        result = run_rcurve(spec, workers=config.workers)

    write_csv(config.out, result)
    manifest_path = config.out.with_name(config.out.name + ".manifest")
    write_manifest(manifest_path, config, result)
    print(f"wrote {config.out} ({len(result.rows)} rows) and {manifest_path}")
    if config.plot:
        from .plots import render_result

        figure_path = config.out.with_suffix(".png")
        render_result(result, figure_path)
        print(f"wrote {figure_path}")
    failures = [row for row in result.rows if row.error]
    if failures:
        print(f"{len(failures)} of {len(result.rows)} points reported errors", file=sys.stderr)
    return 0 if len(failures) < len(result.rows) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambdacav",
        description="Steady states of a driven lambda-atom/cavity system: "
        "EIT spectra, negative-response curves, and R vs cooperativity.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in (
        ("spectrum", "transmission observables versus probe detuning"),
        ("response", "output observables versus input intensity epsilon^2"),
        ("rcurve", "negative-response percentages versus cooperativity"),
        ("probe", "solve a single operating point and print its observables"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, default=None, help="key = value config document")
        p.add_argument("--out", type=Path, default=None, help="output CSV path (reports)")
        p.add_argument("--workers", type=int, default=None, help="bounded worker pool size")
        p.add_argument("--fock-max", type=int, default=None, help="hard cap on the Fock truncation")
        p.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            help="override a single parameter (repeatable)",
        )
        p.add_argument("--plot", dest="plot", action="store_true", default=True,
                       help="render a figure next to the CSV (default)")
        p.add_argument("--no-plot", dest="plot", action="store_false",
                       help="skip figure rendering")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides: dict = {}
        if args.config is not None:
            overrides.update(parse_config(args.config.read_text(encoding="utf-8")))
        for key, value in parse_set_overrides(args.set).items():
            overrides[key] = value
        config = resolve_config(
            args.subcommand,
            overrides,
            out=args.out,
            workers=args.workers,
            fock_max=args.fock_max,
            plot=args.plot,
        )
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
