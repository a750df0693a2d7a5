"""Steady-state simulator for a driven three-level lambda atom in a lossy cavity.

Computes stationary states of the Lindblad master equation and reproduces
EIT transmission spectra, negative-response curves of the transmitted field,
and the negative-response percentage R as a function of cooperativity.
"""

__version__ = "0.1.0"

from .model import DriveMap, Liouvillian, SystemParams, build_hamiltonian, build_liouvillian, dissipator, drive_from_input
from .observables import (
    ObservableSet,
    absorption,
    compute_observables,
    cooperativity,
    g2_zero,
    g_from_cooperativity,
    output_photon_rate,
    predicted_peak_detunings,
)
from .qops import FockTruncation, Operator, annihilation, atomic_sigma, dagger, expectation, tensor
from .steady import (
    DensityMatrix,
    NonUniqueSteadyState,
    SteadyStateError,
    TimedOut,
    TruncationNotConverged,
    TruncationPolicy,
    adaptive_truncation,
    evolve_to_steady,
    solve_steady,
    solve_steady_dense_null,
    solve_steady_direct,
    trace_distance,
)
from .sweeps import (
    ExtremaReport,
    RNotDefined,
    SweepResult,
    SweepSpec,
    find_extrema,
    negative_response_R,
    run_rcurve,
    run_response,
    run_spectrum,
)
