"""Sparse operator algebra on the composite atom (x) field Hilbert space.

The composite space is C^3 (three-level atom, basis |1>, |2>, |3>) tensored
with C^(N+1) (field truncated at Fock level N).  Basis ordering is atom-major:
index = (atomic level - 1) * (N + 1) + fock number, so tensor products are
plain Kronecker products with the atomic factor varying slowest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

ATOM_LEVELS = 3


@dataclass(frozen=True)
class FockTruncation:
    """Highest retained Fock level of the cavity field."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"Fock truncation must keep at least levels 0 and 1, got n_max={self.n_max}")

    @property
    def levels(self) -> int:
        return self.n_max + 1


class Operator:
    """Immutable sparse complex matrix.

    Structural zeros are purged at construction; no value thresholding is
    applied, so every stored entry is kept verbatim.  Instances are safe to
    share read-only across parallel workers.
    """

    __slots__ = ("mat",)

    def __init__(self, mat):
        m = sp.csr_matrix(mat, dtype=np.complex128)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operators must be square, got shape {m.shape}")
        m.eliminate_zeros()
        m.sort_indices()
        self.mat = m

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def nnz(self) -> int:
        return self.mat.nnz

    def dagger(self) -> "Operator":
        return Operator(self.mat.conj().T)

    def toarray(self) -> np.ndarray:
        return self.mat.toarray()

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return Operator(self.mat @ other.mat)

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.mat + other.mat)

    def __sub__(self, other: "Operator") -> "Operator":
        return Operator(self.mat - other.mat)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.mat * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(-self.mat)

    def __repr__(self) -> str:
        return f"Operator(dim={self.dim}, nnz={self.nnz})"


def identity(dim: int) -> Operator:
    return Operator(sp.identity(dim, dtype=np.complex128, format="csr"))


def annihilation(trunc: FockTruncation) -> Operator:
    """Field annihilation operator on the truncated Fock space, <n-1|a|n> = sqrt(n)."""
    n = np.arange(1, trunc.n_max + 1, dtype=np.float64)
    return Operator(sp.diags(np.sqrt(n), offsets=1, format="csr"))


def atomic_sigma(i: int, j: int) -> Operator:
    """Atomic transition operator |i><j| on the bare three-level space."""
    if i not in (1, 2, 3) or j not in (1, 2, 3):
        raise ValueError(f"atomic level indices must be in {{1, 2, 3}}, got ({i}, {j})")
    m = sp.csr_matrix(([1.0 + 0.0j], ([i - 1], [j - 1])), shape=(ATOM_LEVELS, ATOM_LEVELS))
    return Operator(m)


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product with the first factor varying slowest (atom (x) field)."""
    return Operator(sp.kron(a.mat, b.mat, format="csr"))


def dagger(a: Operator) -> Operator:
    return a.dagger()


def expectation(rho, a: Operator) -> complex:
    """Trace(A rho) for a density matrix given as ndarray or DensityMatrix."""
    mat = getattr(rho, "matrix", rho)
    mat = np.asarray(mat)
    if mat.shape != (a.dim, a.dim):
        raise ValueError(f"dimension mismatch: rho {mat.shape} vs operator dim {a.dim}")
    # trace(A rho) = sum_ij A_ij rho_ji, evaluated over the sparse pattern of A
    return complex(a.mat.multiply(mat.T).sum())


def field_operator(op: Operator, trunc: FockTruncation) -> Operator:
    """Lift a bare field operator to the composite space."""
    if op.dim != trunc.levels:
        raise ValueError(f"field operator dim {op.dim} does not match truncation {trunc.levels}")
    return tensor(identity(ATOM_LEVELS), op)


def atom_operator(op: Operator, trunc: FockTruncation) -> Operator:
    """Lift a bare atomic operator to the composite space."""
    if op.dim != ATOM_LEVELS:
        raise ValueError(f"atomic operator dim {op.dim} != {ATOM_LEVELS}")
    return tensor(op, identity(trunc.levels))
