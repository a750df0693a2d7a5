"""Parameter sweeps: transmission spectra, input-output response curves, and
the negative-response metric R versus cooperativity.

Grid points are independent steady-state solves; a bounded process pool may
execute them in parallel, and assembly preserves grid order so serial and
parallel runs produce identical results.  Extrema of response curves are
located on the grid and refined by golden-section re-solves.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .model import DriveMap, SystemParams, drive_from_input
from .observables import ObservableSet, compute_observables, g_from_cooperativity
from .steady import SteadyStateError, TruncationPolicy, adaptive_truncation

__all__ = [
    "SweepSpec",
    "SweepRow",
    "RcurveRow",
    "SweepResult",
    "ExtremaReport",
    "RNotDefined",
    "run_spectrum",
    "run_response",
    "run_rcurve",
    "find_extrema",
    "negative_response_R",
    "default_spectrum_grid",
    "default_response_grid",
    "default_rcurve_grid",
    "rcurve_response_grid",
]

SWEEP_KINDS = ("spectrum", "response", "rcurve")
RESPONSE_GRID_STEP = 0.25
REFINE_REL_RESOLUTION = 1e-3
DELTA_P_RATIO = 1.1


class RNotDefined(SteadyStateError):
    """The requested (max, min) pair does not exist on the response curve."""


def default_spectrum_grid() -> tuple[float, ...]:
    """Probe detunings [-35, 35] at 281 points (0.25 spacing)."""
    return tuple(-35.0 + 0.25 * i for i in range(281))


def default_response_grid(upper: float = 40.0) -> tuple[float, ...]:
    """Input intensities epsilon^2 from 0.25 up to at least `upper`, 0.25 spacing."""
    count = math.ceil((upper - RESPONSE_GRID_STEP) / RESPONSE_GRID_STEP) + 1
    return tuple(RESPONSE_GRID_STEP * (1 + i) for i in range(count))


def default_rcurve_grid() -> tuple[float, ...]:
    return (0.0, 10.0, 25.0, 50.0, 85.0, 100.0, 150.0, 200.0, 250.0, 350.0, 500.0, 750.0, 1000.0)


def rcurve_response_grid(g: float, delta_p: float, c_c_mag: float) -> tuple[float, ...]:
    """Response grid wide enough to contain the two-photon feature.

    The second resonance sits near epsilon^2 = (4 Delta_p^2 - 2 g^2) / |c_c|^2;
    the grid extends 1.5x past it (never below the 40 default) so the
    subsequent minimum stays in range at large cooperativity.
    """
    upper = 40.0
    if c_c_mag > 0:
        two_photon = (4.0 * delta_p * delta_p - 2.0 * g * g) / (c_c_mag * c_c_mag)
        if two_photon > 0:
            upper = max(upper, 1.5 * two_photon)
    return default_response_grid(upper)


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a control grid over a parameter template.

    The grid carries Delta_p for spectrum sweeps, epsilon^2 for response
    sweeps, and cooperativity C for rcurve sweeps.  Spectrum sweeps need the
    fixed input amplitude epsilon; rcurve sweeps may override the nested
    response grid and the Delta_p = 1.1 g tie.
    """

    kind: str
    base: SystemParams
    drive: DriveMap
    grid: tuple[float, ...]
    policy: TruncationPolicy
    epsilon: float | None = None
    response_grid: tuple[float, ...] | None = None
    delta_p_override: float | None = None

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if len(self.grid) < 2:
            raise ValueError("grid needs at least 2 points")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.kind == "spectrum" and self.epsilon is None:
            raise ValueError("spectrum sweeps need a fixed epsilon")


@dataclass(frozen=True)
class SweepRow:
    control: float
    obs: ObservableSet | None
    fock_n: int | None
    residual: float | None
    residual_bound: float | None
    error: str | None = None


@dataclass(frozen=True)
class RcurveRow:
    control: float
    r1: float
    r1_defined: bool
    r2: float
    r2_defined: bool
    max_fock_n: int | None
    max_residual: float | None
    error: str | None = None
    nested_manifest: dict | None = None


@dataclass
class SweepResult:
    kind: str
    rows: list
    manifest: dict
    spec: SweepSpec


@dataclass(frozen=True)
class ExtremaReport:
    """Interior extrema of n_out along the control axis, maxima paired with
    the next minimum to their right."""

    maxima: tuple[tuple[float, float], ...]
    minima: tuple[tuple[float, float], ...]

    def pairs(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        out = []
        for xmax, hmax in self.maxima:
            following = [(x, h) for x, h in self.minima if x > xmax]
            if following:
                out.append(((xmax, hmax), following[0]))
        return out


def _params_for_spectrum(spec: SweepSpec, delta_p: float) -> SystemParams:
    omega_p, omega_c = drive_from_input(spec.epsilon, spec.drive)
    return replace(spec.base, Delta_p=delta_p, Omega_p=omega_p, Omega_c=omega_c)


def _params_for_response(spec: SweepSpec, eps_sq: float) -> SystemParams:
    omega_p, omega_c = drive_from_input(math.sqrt(eps_sq), spec.drive)
    return replace(spec.base, Omega_p=omega_p, Omega_c=omega_c)


def _point_worker(task) -> SweepRow:
    control, params, policy = task
    try:
        dm = adaptive_truncation(params, policy)
    except SteadyStateError as exc:
        return SweepRow(
            control=control, obs=None, fock_n=None, residual=None,
            residual_bound=None, error=f"{type(exc).__name__}: {exc}",
        )
    return SweepRow(
        control=control,
        obs=compute_observables(dm, params),
        fock_n=dm.trunc_used.n_max if dm.trunc_used else None,
        residual=dm.residual,
        residual_bound=dm.residual_bound,
        error=None,
    )


def _run_grid(spec: SweepSpec, params_fn, workers: int) -> list[SweepRow]:
    tasks = [(x, params_fn(spec, x), spec.policy) for x in spec.grid]
    if workers <= 1:
        return [_point_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_point_worker, tasks))


def base_manifest(spec: SweepSpec) -> dict:
    manifest = {"kind": spec.kind, "grid": spec.grid}
    if spec.epsilon is not None:
        manifest["epsilon"] = spec.epsilon
    p = spec.base
    manifest.update(
        g=p.g, Delta_1=p.Delta_1, Delta_c=p.Delta_c, Delta_p=p.Delta_p,
        kappa_A=p.kappa_A, kappa_B=p.kappa_B, Gamma_31=p.Gamma_31,
        Gamma_32=p.Gamma_32, gamma_2=p.gamma_2, gamma_3=p.gamma_3,
        c_p=complex(spec.drive.c_p), c_c=complex(spec.drive.c_c),
        N_start=spec.policy.N_start, growth=spec.policy.growth,
        rel_tol=spec.policy.rel_tol, tail_tol=spec.policy.tail_tol,
        N_max=spec.policy.N_max,
    )
    if spec.response_grid is not None:
        manifest["response_grid"] = spec.response_grid
    if spec.delta_p_override is not None:
        manifest["Delta_p_override"] = spec.delta_p_override
    return manifest


def run_spectrum(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Steady-state observables versus probe detuning at fixed input amplitude."""
    if spec.kind != "spectrum":
        raise ValueError("spec.kind must be 'spectrum'")
    rows = _run_grid(spec, _params_for_spectrum, workers)
    return SweepResult(kind="spectrum", rows=rows, manifest=base_manifest(spec), spec=spec)


def run_response(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Observables versus input intensity; probe and control both scale with epsilon."""
    if spec.kind != "response":
        raise ValueError("spec.kind must be 'response'")
    rows = _run_grid(spec, _params_for_response, workers)
    return SweepResult(kind="response", rows=rows, manifest=base_manifest(spec), spec=spec)


def _resolve_objective(spec: SweepSpec):
    if spec.kind == "spectrum":
        params_fn = _params_for_spectrum
    elif spec.kind == "response":
        params_fn = _params_for_response
    else:
        return None
    cache: dict[float, float] = {}

    def objective(x: float) -> float:
        if x not in cache:
            params = params_fn(spec, x)
            dm = adaptive_truncation(params, spec.policy)
            cache[x] = compute_observables(dm, params).n_out
        return cache[x]

    return objective


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_refine(objective, lo: float, hi: float, seek_max: bool, seed: tuple[float, float]) -> tuple[float, float]:
    """Golden-section search returning the best probed (position, value).

    The discrete extremum is the starting candidate, so refinement can only
    improve on it.
    """
    sign = 1.0 if seek_max else -1.0
    tol = REFINE_REL_RESOLUTION * max(1.0, abs(0.5 * (lo + hi)))
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc = sign * objective(c)
    fd = sign * objective(d)
    best = (seed[0], sign * seed[1])
    for probe in ((c, fc), (d, fd)):
        if probe[1] > best[1]:
            best = probe
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = sign * objective(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = sign * objective(d)
        probe = (c, fc) if fc >= fd else (d, fd)
        if probe[1] > best[1]:
            best = probe
    return best[0], sign * best[1]


def find_extrema(result: SweepResult, objective=None, refine: bool = True) -> ExtremaReport:
    """Locate interior local extrema of n_out, then sharpen them by re-solving.

    Discrete extrema use strict three-point comparisons; each is refined by a
    golden-section search between its neighboring grid points.  A custom
    objective may replace the steady-state re-solve (used for synthetic data);
    without either, the discrete values are returned unrefined.
    """
    series = [
        (row.control, row.obs.n_out)
        for row in result.rows
        if row.error is None and row.obs is not None
    ]
    if len(series) < 5:
        raise ValueError("extrema detection needs at least 5 solved rows")
    xs = [x for x, _ in series]
    ys = [y for _, y in series]
    if objective is None and refine:
        objective = _resolve_objective(result.spec)

    maxima, minima = [], []
    for i in range(1, len(series) - 1):
        is_max = ys[i] > ys[i - 1] and ys[i] > ys[i + 1]
        is_min = ys[i] < ys[i - 1] and ys[i] < ys[i + 1]
        if not (is_max or is_min):
            continue
        if refine and objective is not None:
            x, h = _golden_refine(
                objective, xs[i - 1], xs[i + 1], seek_max=is_max, seed=(xs[i], ys[i])
            )
        else:
            x, h = xs[i], ys[i]
        (maxima if is_max else minima).append((x, h))
    return ExtremaReport(maxima=tuple(maxima), minima=tuple(minima))


def negative_response_R(report: ExtremaReport, peak_index: int) -> float:
    """Percent drop from the requested peak to the following minimum.

    peak_index counts maxima from the left (1 = leftmost).  Raises RNotDefined
    when the peak or its subsequent minimum is missing.
    """
    if peak_index < 1:
        raise ValueError("peak_index starts at 1")
    pairs = report.pairs()
    if len(pairs) < peak_index:
        raise RNotDefined(f"no (max, min) pair for peak {peak_index}")
    (_, h_max), (_, h_min) = pairs[peak_index - 1]
    if h_max <= 0:
        raise RNotDefined("peak height is not positive")
    return 100.0 * (h_max - h_min) / h_max


def run_rcurve(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """R for the first and second peaks versus cooperativity.

    Per grid point the coupling is g = sqrt(2 Gamma C) with Delta_p = 1.1 g
    (unless overridden), a nested response sweep is run, and R is extracted
    for both peaks.  Nested sweeps reuse the same worker bound, never nesting
    pools.
    """
    if spec.kind != "rcurve":
        raise ValueError("spec.kind must be 'rcurve'")
    gamma = spec.base.Gamma
    rows = []
    for c in spec.grid:
        g = g_from_cooperativity(c, gamma)
        delta_p = spec.delta_p_override if spec.delta_p_override is not None else DELTA_P_RATIO * g
        grid = spec.response_grid or rcurve_response_grid(g, delta_p, abs(complex(spec.drive.c_c)))
        nested = SweepSpec(
            kind="response",
            base=replace(spec.base, g=g, Delta_p=delta_p),
            drive=spec.drive,
            grid=grid,
            policy=spec.policy,
        )
        try:
            result = run_response(nested, workers=workers)
            report = find_extrema(result)
            r_values = []
            for peak in (1, 2):
                try:
                    r_values.append((negative_response_R(report, peak), True))
                except RNotDefined:
                    r_values.append((0.0, False))
            solved = [r for r in result.rows if r.error is None]
            errors = [r for r in result.rows if r.error is not None]
            rows.append(
                RcurveRow(
                    control=c,
                    r1=r_values[0][0], r1_defined=r_values[0][1],
                    r2=r_values[1][0], r2_defined=r_values[1][1],
                    max_fock_n=max((r.fock_n for r in solved), default=None),
                    max_residual=max((r.residual for r in solved), default=None),
                    error=f"{len(errors)} nested point failures" if errors else None,
                    nested_manifest=result.manifest,
                )
            )
        except (SteadyStateError, ValueError) as exc:
            rows.append(
                RcurveRow(
                    control=c, r1=0.0, r1_defined=False, r2=0.0, r2_defined=False,
                    max_fock_n=None, max_residual=None,
                    error=f"{type(exc).__name__}: {exc}", nested_manifest=None,
                )
            )
    return SweepResult(kind="rcurve", rows=rows, manifest=base_manifest(spec), spec=spec)
