"""Physical quantities extracted from a steady state.

The transmitted field obeys b_out = sqrt(2 kappa_B) a, so output photon rates
and normalized correlations follow directly from intracavity moments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SystemParams
from .qops import ATOM_LEVELS, FockTruncation, annihilation, atom_operator, atomic_sigma, expectation, field_operator

__all__ = [
    "ObservableSet",
    "intracavity_photon_number",
    "output_photon_rate",
    "g2_zero",
    "absorption",
    "predicted_peak_detunings",
    "cooperativity",
    "g_from_cooperativity",
    "compute_observables",
]

G2_PHOTON_FLOOR = 1e-12


@dataclass(frozen=True)
class ObservableSet:
    """One steady state reduced to the four reported quantities.

    g2_zero is NaN when the photon number is too small for the normalized
    correlation to be defined.
    """

    n_intracavity: float
    n_out: float
    g2_zero: float
    absorption: float


def _trunc_for(rho) -> FockTruncation:
    dim = np.asarray(getattr(rho, "matrix", rho)).shape[0]
    levels, rem = divmod(dim, ATOM_LEVELS)
    if rem or levels < 2:
        raise ValueError(f"state of dim {dim} is not a composite atom/field state")
    return FockTruncation(levels - 1)


def intracavity_photon_number(rho) -> float:
    trunc = _trunc_for(rho)
    a = field_operator(annihilation(trunc), trunc)
    return float(expectation(rho, a.dagger() @ a).real)


def output_photon_rate(rho, params: SystemParams) -> float:
    """Output photon number rate 2 kappa_B <a'a> / kappa (kappa = 1)."""
    return 2.0 * params.kappa_B * intracavity_photon_number(rho) / params.kappa


def g2_zero(rho) -> float:
    """Zero-delay second-order correlation <a'a'aa> / <a'a>^2.

    The input-output relation makes the intracavity and transmitted values
    identical, so only the intracavity one is computed.  Returns NaN for a
    vanishing photon number instead of raising.
    """
    trunc = _trunc_for(rho)
    a = field_operator(annihilation(trunc), trunc)
    ad = a.dagger()
    n = float(expectation(rho, ad @ a).real)
    if n <= G2_PHOTON_FLOOR:
        return math.nan
    pair = float(expectation(rho, ad @ ad @ a @ a).real)
    return pair / (n * n)


def absorption(rho) -> float:
    """Atomic absorption |Im <sigma_13>| with sigma_13 = |1><3|."""
    trunc = _trunc_for(rho)
    s13 = atom_operator(atomic_sigma(1, 3), trunc)
    return abs(float(expectation(rho, s13).imag))


def predicted_peak_detunings(g: float, omega_c: float, n_max: int) -> list[float]:
    """Side-peak positions sqrt(n g^2 + Omega_c^2) for n = 1..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return [math.sqrt(n * g * g + omega_c * omega_c) for n in range(1, n_max + 1)]


def cooperativity(g: float, gamma: float) -> float:
    """C = g^2 / (2 kappa Gamma) with kappa = 1."""
    if gamma <= 0:
        raise ValueError(f"Gamma must be positive, got {gamma}")
    return g * g / (2.0 * gamma)


def g_from_cooperativity(c: float, gamma: float) -> float:
    """Inverse map: the coupling that realizes cooperativity C at decay Gamma."""
    if gamma <= 0:
        raise ValueError(f"Gamma must be positive, got {gamma}")
    if c < 0:
        raise ValueError(f"cooperativity must be >= 0, got {c}")
    return math.sqrt(2.0 * gamma * c)


def compute_observables(rho, params: SystemParams) -> ObservableSet:
    n = intracavity_photon_number(rho)
    return ObservableSet(
        n_intracavity=n,
        n_out=2.0 * params.kappa_B * n / params.kappa,
        g2_zero=g2_zero(rho),
        absorption=absorption(rho),
    )
