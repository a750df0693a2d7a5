"""Physical model: system parameters, rotating-frame Hamiltonian, Liouvillian.

All rates and frequencies are expressed in units of the total cavity decay
rate kappa = kappa_A + kappa_B = 1.  Density matrices are vectorized row-major,
vec(rho)[i * dim + j] = rho[i, j]; superoperators act on such vectors.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .qops import (
    ATOM_LEVELS,
    FockTruncation,
    Operator,
    annihilation,
    atom_operator,
    atomic_sigma,
    field_operator,
    tensor,
)

__all__ = [
    "SystemParams",
    "DriveMap",
    "Liouvillian",
    "drive_from_input",
    "build_hamiltonian",
    "dissipator",
    "build_liouvillian",
    "vectorize",
    "unvectorize",
    "trace_vector",
]

_RATE_FIELDS = ("kappa_A", "kappa_B", "Gamma_31", "Gamma_32", "gamma_2", "gamma_3")


@dataclass(frozen=True)
class SystemParams:
    """All rates, detunings, and drive amplitudes, in units of kappa.

    Defaults follow the symmetric-cavity convention (kappa_A = kappa_B = 1/2)
    with equal polarization decay branches and no pure dephasing.
    """

    g: float = 20.0
    Omega_c: complex = 0.0 + 0.0j
    Omega_p: complex = 0.0 + 0.0j
    Delta_1: float = 0.0
    Delta_c: float = 0.0
    Delta_p: float = 0.0
    kappa_A: float = 0.5
    kappa_B: float = 0.5
    Gamma_31: float = 0.5
    Gamma_32: float = 0.5
    gamma_2: float = 0.0
    gamma_3: float = 0.0

    def __post_init__(self):
        for name in _RATE_FIELDS:
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if abs(self.kappa_A + self.kappa_B - 1.0) > 1e-12:
            raise ValueError(
                f"kappa_A + kappa_B must equal 1 (kappa is the frequency unit), "
                f"got {self.kappa_A} + {self.kappa_B}"
            )
        for name in ("g", "Delta_1", "Delta_c", "Delta_p"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("Omega_c", "Omega_p"):
            if not cmath.isfinite(complex(getattr(self, name))):
                raise ValueError(f"{name} must be finite")

    @property
    def kappa(self) -> float:
        return self.kappa_A + self.kappa_B

    @property
    def Gamma(self) -> float:
        """Total polarization decay rate out of |3>."""
        return self.Gamma_31 + self.Gamma_32

    def with_drive(self, epsilon: float, drive: "DriveMap") -> "SystemParams":
        omega_p, omega_c = drive_from_input(epsilon, drive)
        return replace(self, Omega_p=omega_p, Omega_c=omega_c)


@dataclass(frozen=True)
class DriveMap:
    """Linear map from the input field amplitude to the two drive amplitudes.

    The beam-splitter / polarizer / lens chain collapses to two effective
    complex coefficients: Omega_p = c_p * epsilon and Omega_c = c_c * epsilon.
    """

    c_p: complex = field(default=-0.8j * math.sqrt(0.5))
    c_c: complex = 8.0 + 0.0j

    def __post_init__(self):
        for name in ("c_p", "c_c"):
            if not cmath.isfinite(complex(getattr(self, name))):
                raise ValueError(f"{name} must be finite")


def default_drive_map(kappa_A: float = 0.5) -> DriveMap:
    """Drive coefficients of the reference setup: c_p = -0.8i sqrt(kappa_A), c_c = 8."""
    return DriveMap(c_p=-0.8j * math.sqrt(kappa_A), c_c=8.0 + 0.0j)


def drive_from_input(epsilon: float, drive: DriveMap) -> tuple[complex, complex]:
    """Split an input amplitude epsilon >= 0 into (Omega_p, Omega_c)."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    return complex(drive.c_p) * epsilon, complex(drive.c_c) * epsilon


@dataclass(frozen=True)
class Liouvillian:
    """Sparse superoperator acting on row-major vectorized density matrices."""

    mat: sp.csr_matrix
    hilbert_dim: int

    @property
    def dim(self) -> int:
        """Dimension of the vectorized space, hilbert_dim ** 2."""
        return self.hilbert_dim * self.hilbert_dim

    @property
    def max_entry(self) -> float:
        return float(np.abs(self.mat.data).max()) if self.mat.nnz else 0.0

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.mat @ vec

    def __add__(self, other: "Liouvillian") -> "Liouvillian":
        if self.hilbert_dim != other.hilbert_dim:
            raise ValueError("Liouvillian dimension mismatch")
        return Liouvillian(mat=(self.mat + other.mat).tocsr(), hilbert_dim=self.hilbert_dim)

    def __mul__(self, scalar) -> "Liouvillian":
        return Liouvillian(mat=(self.mat * scalar).tocsr(), hilbert_dim=self.hilbert_dim)

    __rmul__ = __mul__


def vectorize(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=np.complex128).ravel()


def unvectorize(vec: np.ndarray) -> np.ndarray:
    dim = math.isqrt(vec.size)
    if dim * dim != vec.size:
        raise ValueError(f"vector of size {vec.size} is not a vectorized square matrix")
    return np.asarray(vec, dtype=np.complex128).reshape(dim, dim)


def trace_vector(dim: int) -> np.ndarray:
    """Row vector t with t . vec(rho) = trace(rho)."""
    t = np.zeros(dim * dim, dtype=np.complex128)
    t[:: dim + 1] = 1.0
    return t


def _spre(mat: sp.spmatrix) -> sp.csr_matrix:
    d = mat.shape[0]
    return sp.kron(mat, sp.identity(d, format="csr"), format="csr")


def _spost(mat: sp.spmatrix) -> sp.csr_matrix:
    d = mat.shape[0]
    return sp.kron(sp.identity(d, format="csr"), mat.T, format="csr")


def build_hamiltonian(params: SystemParams, trunc: FockTruncation) -> Operator:
    """Rotating-frame Hamiltonian on the composite space.

    H = Delta_1 s33 + (Delta_1 - Delta_c) s22 + Delta_p s11 - Delta_p a'a
        + [Omega_p a + g a s31 + Omega_c s32 + h.c.]

    with atomic operators lifted by the field identity and vice versa.  The
    result is Hermitian by construction.
    """
    a_bare = annihilation(trunc)
    a = field_operator(a_bare, trunc)
    number = a.dagger() @ a
    s11 = atom_operator(atomic_sigma(1, 1), trunc)
    s22 = atom_operator(atomic_sigma(2, 2), trunc)
    s33 = atom_operator(atomic_sigma(3, 3), trunc)
    s32 = atom_operator(atomic_sigma(3, 2), trunc)

    diagonal = (
        params.Delta_1 * s33
        + (params.Delta_1 - params.Delta_c) * s22
        + params.Delta_p * s11
        - params.Delta_p * number
    )
    coupling = (
        params.Omega_p * a
        + params.g * tensor(atomic_sigma(3, 1), a_bare)
        + params.Omega_c * s32
    )
    return diagonal + coupling + coupling.dagger()


def dissipator(a: Operator) -> Liouvillian:
    """Superoperator for D[A] rho = 2 A rho A' - A'A rho - rho A'A."""
    ada = (a.mat.conj().T @ a.mat).tocsr()
    mat = 2.0 * sp.kron(a.mat, a.mat.conj(), format="csr") - _spre(ada) - _spost(ada)
    return Liouvillian(mat=mat.tocsr(), hilbert_dim=a.dim)


def build_liouvillian(params: SystemParams, trunc: FockTruncation) -> Liouvillian:
    """Full generator: coherent part plus the five decay channels.

    L = -i[H, .] + kappa D[a] + Gamma_31 D[s13] + Gamma_32 D[s23]
        + gamma_2 D[s22] + gamma_3 D[s33]

    The rate prefactors multiply the bare dissipator forms directly; with the
    factor-2 dissipator convention the cavity field amplitude decays at kappa.
    """
    h = build_hamiltonian(params, trunc).mat
    a = field_operator(annihilation(trunc), trunc)
    mat = -1j * (_spre(h) - _spost(h)) + params.kappa * dissipator(a).mat
    channels = (
        (params.Gamma_31, atomic_sigma(1, 3)),
        (params.Gamma_32, atomic_sigma(2, 3)),
        (params.gamma_2, atomic_sigma(2, 2)),
        (params.gamma_3, atomic_sigma(3, 3)),
    )
    for rate, sigma in channels:
        if rate != 0.0:
            mat = mat + rate * dissipator(atom_operator(sigma, trunc)).mat
    return Liouvillian(mat=mat.tocsr(), hilbert_dim=ATOM_LEVELS * trunc.levels)
