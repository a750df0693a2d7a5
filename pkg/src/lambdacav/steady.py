"""Stationary states of the master equation, with independent cross-checking solvers.

Three routes to the same object: a direct sparse linear solve (production
path), a dense null-space extraction (oracle for small truncations), and
explicit time evolution (dynamical oracle).  An adaptive wrapper grows the
Fock truncation until the photon statistics stop moving.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import MatrixRankWarning, lsmr, spsolve

from .model import Liouvillian, SystemParams, build_liouvillian, unvectorize, vectorize
from .qops import ATOM_LEVELS, FockTruncation

__all__ = [
    "DensityMatrix",
    "TruncationPolicy",
    "SteadyStateError",
    "NonUniqueSteadyState",
    "TimedOut",
    "TruncationNotConverged",
    "solve_steady_direct",
    "solve_steady_dense_null",
    "solve_steady",
    "evolve_to_steady",
    "adaptive_truncation",
    "trace_distance",
    "ground_vacuum_state",
    "fock_populations",
]

TRACE_TOL = 1e-12
HERMITICITY_TOL = 1e-10
POSITIVITY_TOL = -1e-8
RESIDUAL_TOL = 1e-10
DENSE_NULL_MAX_DIM = 60
SINGULAR_VALUE_RATIO = 1e3
PHOTON_NOISE_FLOOR = 1e-6


class SteadyStateError(RuntimeError):
    """A solve produced no acceptable stationary state."""


class NonUniqueSteadyState(SteadyStateError):
    """The stationary manifold is degenerate (singular trace-replaced system)."""


class TimedOut(SteadyStateError):
    """Time evolution did not reach the requested derivative norm in t_max."""

    def __init__(self, message: str, state: "DensityMatrix"):
        super().__init__(message)
        self.state = state


class TruncationNotConverged(SteadyStateError):
    """Fock-space growth hit the cap before the convergence criteria were met."""

    def __init__(self, message: str, best: "DensityMatrix", history: list):
        super().__init__(message)
        self.best = best
        self.history = history


@dataclass
class DensityMatrix:
    """Steady-state solution with solver diagnostics attached.

    The matrix is dense, Hermitian, unit trace; residual is the 2-norm of
    L vec(rho); hermit_defect records the magnitude of the anti-Hermitian
    part removed during post-processing.
    """

    matrix: np.ndarray
    residual: float
    trunc_used: FockTruncation | None = None
    hermit_defect: float = 0.0
    trace_defect: float = 0.0
    min_eig: float = 0.0
    residual_bound: float = math.inf

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class TruncationPolicy:
    """Growth schedule and stopping tolerances for the adaptive Fock truncation."""

    N_start: int = 8
    growth: float = 1.5
    rel_tol: float = 1e-4
    tail_tol: float = 1e-6
    N_max: int = 120

    def __post_init__(self):
        if self.N_start < 2:
            raise ValueError("N_start must be >= 2")
        if self.growth <= 1.0:
            raise ValueError("growth must exceed 1")
        if self.N_max > 160:
            raise ValueError("N_max above the hard cap of 160")
        if self.N_max < self.N_start:
            raise ValueError("N_max must be >= N_start")
        if self.rel_tol <= 0 or self.tail_tol <= 0:
            raise ValueError("tolerances must be positive")


def _norm2(x: np.ndarray) -> float:
    # numpy pairwise-sum reduction: deterministic for a fixed length
    return float(np.sqrt(np.sum(np.abs(x) ** 2)))


def _finalize(
    x: np.ndarray,
    liou: Liouvillian,
    trunc: FockTruncation | None,
    validate: bool = True,
    positivity_as_degenerate: bool = False,
) -> DensityMatrix:
    """Phase-fix, hermitize, normalize a raw solution vector and check invariants."""
    rho = unvectorize(x)
    tr = complex(np.trace(rho))
    if abs(tr) < 1e-10 * max(_norm2(x), 1.0):
        raise NonUniqueSteadyState(f"solution has vanishing trace {tr!r}")
    rho = rho / tr
    anti = 0.5 * (rho - rho.conj().T)
    hermit_defect = float(np.abs(anti).max())
    rho = rho - anti
    tr_real = float(np.trace(rho).real)
    trace_defect = abs(tr_real - 1.0)
    rho = rho / tr_real
    residual = _norm2(liou.apply(vectorize(rho)))
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    bound = RESIDUAL_TOL * (1.0 + liou.max_entry)
    dm = DensityMatrix(
        matrix=rho,
        residual=residual,
        trunc_used=trunc,
        hermit_defect=hermit_defect,
        trace_defect=trace_defect,
        min_eig=min_eig,
        residual_bound=bound,
    )
    if validate:
        if not np.all(np.isfinite(rho)):
            raise NonUniqueSteadyState("non-finite steady-state solution")
        if residual > bound:
            raise NonUniqueSteadyState(
                f"residual {residual:.3e} exceeds bound {bound:.3e}; "
                "trace-replaced system is singular or badly conditioned"
            )
        if min_eig < POSITIVITY_TOL:
            message = (
                f"minimum eigenvalue {min_eig:.3e} below positivity tolerance {POSITIVITY_TOL}"
            )
            if positivity_as_degenerate:
                # a unique GKLS steady state solved to small residual is positive;
                # landing on a non-state solution means the system was singular
                raise NonUniqueSteadyState(message)
            raise SteadyStateError(message)
    return dm


def check_invariants(dm: DensityMatrix, liou: Liouvillian | None = None) -> None:
    """Assert trace, Hermiticity, positivity, and (optionally) residual bounds."""
    if abs(float(np.trace(dm.matrix).real) - 1.0) > TRACE_TOL:
        raise SteadyStateError("trace deviates from 1 beyond tolerance")
    if float(np.abs(dm.matrix - dm.matrix.conj().T).max()) > HERMITICITY_TOL:
        raise SteadyStateError("Hermiticity violated beyond tolerance")
    if float(np.linalg.eigvalsh(dm.matrix)[0]) < POSITIVITY_TOL:
        raise SteadyStateError("positivity violated beyond tolerance")
    if liou is not None:
        bound = RESIDUAL_TOL * (1.0 + liou.max_entry)
        if _norm2(liou.apply(vectorize(dm.matrix))) > bound:
            raise SteadyStateError("stationarity residual above bound")


def _trace_replaced_system(liou: Liouvillian, trace_row: int | None):
    d = liou.hilbert_dim
    d2 = liou.dim
    r = d2 - 1 if trace_row is None else trace_row
    if not 0 <= r < d2:
        raise ValueError(f"trace_row {r} outside [0, {d2})")
    if r % (d + 1) != 0:
        # only rows on vectorized diagonal slots are redundant (their sum is
        # the trace-preservation identity); dropping any other row loses rank
        raise ValueError(f"trace_row {r} must sit on a diagonal slot k*(dim+1)")
    m = liou.mat.tocsr(copy=True)
    start, end = m.indptr[r], m.indptr[r + 1]
    m.data[start:end] = 0.0
    m.eliminate_zeros()
    trace_entries = sp.csr_matrix(
        (np.ones(d, dtype=np.complex128), (np.full(d, r), np.arange(0, d2, d + 1))),
        shape=(d2, d2),
    )
    b = np.zeros(d2, dtype=np.complex128)
    b[r] = 1.0
    return (m + trace_entries).tocsc(), b


def solve_steady_direct(
    liou: Liouvillian,
    trace_row: int | None = None,
    trunc: FockTruncation | None = None,
) -> DensityMatrix:
    """Sparse LU solve of L with one row replaced by the trace functional.

    Raises NonUniqueSteadyState when the replaced system is singular, which
    signals a degenerate stationary manifold.
    """
    m, b = _trace_replaced_system(liou, trace_row)
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            x = spsolve(m, b)
        except (MatrixRankWarning, RuntimeError) as exc:
            raise NonUniqueSteadyState(f"trace-replaced system is singular: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NonUniqueSteadyState("singular system produced non-finite solution")
    return _finalize(x, liou, trunc, positivity_as_degenerate=True)


def solve_steady_min_norm(
    liou: Liouvillian,
    trace_row: int | None = None,
    trunc: FockTruncation | None = None,
) -> DensityMatrix:
    """Least-squares resolution for degenerate manifolds.

    Returns the minimum-norm unit-trace stationary state; any observable that
    is constant over the stationary manifold is recovered exactly.
    """
    m, b = _trace_replaced_system(liou, trace_row)
    result = lsmr(m, b, atol=1e-14, btol=1e-14, conlim=0.0, maxiter=50 * m.shape[0])
    x = result[0]
    return _finalize(x, liou, trunc)


def solve_steady(
    liou: Liouvillian,
    trace_row: int | None = None,
    trunc: FockTruncation | None = None,
) -> DensityMatrix:
    """Direct solve with a min-norm fallback for degenerate stationary manifolds."""
    try:
        return solve_steady_direct(liou, trace_row=trace_row, trunc=trunc)
    except NonUniqueSteadyState:
        return solve_steady_min_norm(liou, trace_row=trace_row, trunc=trunc)


def solve_steady_dense_null(
    liou: Liouvillian,
    trunc: FockTruncation | None = None,
) -> DensityMatrix:
    """Dense SVD null-space oracle, feasible for small truncations only."""
    if liou.hilbert_dim > DENSE_NULL_MAX_DIM:
        raise ValueError(
            f"dense null-space solve limited to hilbert_dim <= {DENSE_NULL_MAX_DIM}, "
            f"got {liou.hilbert_dim}"
        )
    dense = liou.mat.toarray()
    _, s, vh = np.linalg.svd(dense)
    if s[-2] < SINGULAR_VALUE_RATIO * s[-1]:
        raise NonUniqueSteadyState(
            f"near-degenerate kernel: singular values {s[-1]:.3e}, {s[-2]:.3e}"
        )
    x = vh[-1].conj()
    return _finalize(x, liou, trunc)


def evolve_to_steady(
    liou: Liouvillian,
    rho0,
    t_max: float,
    step_tol: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    trunc: FockTruncation | None = None,
) -> DensityMatrix:
    """Integrate d vec(rho)/dt = L vec(rho) until ||d rho/dt|| drops below step_tol.

    Uses an adaptive explicit high-order Runge-Kutta scheme; raises TimedOut
    (with the last state attached) if the threshold is not reached by t_max.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    rho0_mat = np.asarray(getattr(rho0, "matrix", rho0), dtype=np.complex128)
    y0 = vectorize(rho0_mat)
    if math.isinf(step_tol):
        return _finalize(y0, liou, trunc, validate=False)
    mat = liou.mat

    def rhs(_t, y):
        return mat @ y

    def settled(_t, y):
        return _norm2(mat @ y) - step_tol

    settled.terminal = True
    settled.direction = -1
    sol = solve_ivp(rhs, (0.0, t_max), y0, method="DOP853", rtol=rtol, atol=atol, events=settled)
    if sol.status < 0:
        raise SteadyStateError(f"time integration failed: {sol.message}")
    final = sol.y[:, -1]
    if sol.status != 1:
        state = _finalize(final, liou, trunc, validate=False)
        raise TimedOut(
            f"derivative norm {_norm2(mat @ final):.3e} still above {step_tol:.3e} at t={t_max}",
            state,
        )
    return _finalize(final, liou, trunc, validate=False)


def fock_populations(rho: np.ndarray) -> np.ndarray:
    """Photon-number distribution, traced over the atom."""
    dim = rho.shape[0]
    levels = dim // ATOM_LEVELS
    blocks = rho.reshape(ATOM_LEVELS, levels, ATOM_LEVELS, levels)
    pops = np.zeros(levels)
    for i in range(ATOM_LEVELS):
        pops += np.diag(blocks[i, :, i, :]).real
    return pops


def _mean_photons(rho: np.ndarray) -> float:
    pops = fock_populations(rho)
    return float(np.dot(np.arange(pops.size), pops))


def adaptive_truncation(
    params: SystemParams,
    policy: TruncationPolicy,
    trace_row: int | None = None,
) -> DensityMatrix:
    """Grow the Fock space until photon number and tail population converge.

    Solves at N, then at ceil(growth * N), accepting once the relative change
    of <a'a> is below rel_tol and the top two Fock levels hold less than
    tail_tol of the population.  The accepted solution (at the larger N) is
    returned with its truncation recorded.
    """
    n_levels = policy.N_start
    trunc = FockTruncation(n_levels)
    dm_prev = solve_steady(build_liouvillian(params, trunc), trace_row=trace_row, trunc=trunc)
    mean_prev = _mean_photons(dm_prev.matrix)
    history = [(n_levels, mean_prev, float(fock_populations(dm_prev.matrix)[-2:].sum()))]
    while True:
        n_next = min(math.ceil(policy.growth * n_levels), policy.N_max)
        if n_next == n_levels:
            raise TruncationNotConverged(
                f"no convergence up to N_max={policy.N_max}", best=dm_prev, history=history
            )
        trunc = FockTruncation(n_next)
        dm = solve_steady(build_liouvillian(params, trunc), trace_row=trace_row, trunc=trunc)
        mean = _mean_photons(dm.matrix)
        tail = float(fock_populations(dm.matrix)[-2:].sum())
        history.append((n_next, mean, tail))
        # photon numbers below the floor are solver noise, not physics;
        # comparing against it keeps near-vacuum states from never converging
        rel_change = abs(mean - mean_prev) / max(abs(mean), PHOTON_NOISE_FLOOR)
        if rel_change < policy.rel_tol and tail < policy.tail_tol:
            return dm
        n_levels, dm_prev, mean_prev = n_next, dm, mean


def trace_distance(a, b) -> float:
    """Half the trace norm of the difference of two states."""
    ma = np.asarray(getattr(a, "matrix", a))
    mb = np.asarray(getattr(b, "matrix", b))
    return float(0.5 * np.sum(np.linalg.svd(ma - mb, compute_uv=False)))


def ground_vacuum_state(trunc: FockTruncation) -> np.ndarray:
    """Projector onto atom |1> with the cavity in vacuum."""
    dim = ATOM_LEVELS * trunc.levels
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    return rho
