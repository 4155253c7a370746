"""Dense complex-matrix kernel.

Matrices are plain square ``numpy`` arrays of dtype ``complex128``.  Bipartite
operators always put subsystem A in the first Kronecker factor and subsystem C
in the second.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GROUP_TOL = 1e-9
HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    """Operand dimensions do not fit together."""


class HermiticityError(ValueError):
    """A matrix that must be Hermitian is not."""

    def __init__(self, asymmetry: float, tol: float):
        super().__init__(f"matrix is not Hermitian: max |m - m^H| = {asymmetry:.3e} > {tol:.1e}")
        self.asymmetry = asymmetry


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a square complex128 array, raising DimensionError otherwise."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def allclose(a, b, atol: float) -> bool:
    """Entrywise comparison with an explicit absolute tolerance."""
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and bool(np.max(np.abs(a - b), initial=0.0) <= atol)


def max_abs(m) -> float:
    return float(np.max(np.abs(m), initial=0.0))


def hermitian_asymmetry(m) -> float:
    m = np.asarray(m)
    return max_abs(m - m.conj().T)


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return the Hermitian part of ``m`` after checking it is Hermitian within ``tol``."""
    m = as_matrix(m)
    asym = hermitian_asymmetry(m)
    if asym > tol:
        raise HermiticityError(asym, tol)
    return 0.5 * (m + m.conj().T)


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    return a @ b + b @ a


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with ``a`` acting on subsystem A and ``b`` on subsystem C."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dim_a: int, dim_c: int, keep: str = "A") -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    m : array_like
        Operator on the ``dim_a * dim_c`` dimensional space.
    dim_a, dim_c : int
        Factor dimensions, A first.
    keep : {"A", "C"}
        Subsystem that survives.
    """
    m = as_matrix(m)
    if dim_a < 1 or dim_c < 1 or m.shape[0] != dim_a * dim_c:
        raise DimensionError(
            f"matrix of dim {m.shape[0]} does not split as {dim_a} x {dim_c}"
        )
    t = m.reshape(dim_a, dim_c, dim_a, dim_c)
    keep = keep.upper()
    if keep == "A":
        return np.einsum("ikjk->ij", t)
    if keep == "C":
        return np.einsum("kikj->ij", t)
    raise ValueError(f"keep must be 'A' or 'C', got {keep!r}")


@dataclass(frozen=True)
class SpectralGroup:
    eigenvalue: float
    projector: np.ndarray
    multiplicity: int


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues of a Hermitian matrix, merged into groups with orthogonal projectors.

    Groups are ordered by strictly increasing eigenvalue.
    """

    groups: tuple[SpectralGroup, ...]
    source_dim: int

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([g.eigenvalue for g in self.groups])

    @property
    def projectors(self) -> list[np.ndarray]:
        return [g.projector for g in self.groups]

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.source_dim, self.source_dim), dtype=np.complex128)
        for g in self.groups:
            out += g.eigenvalue * g.projector
        return out

    def apply(self, func) -> np.ndarray:
        """Matrix function ``sum_j func(lambda_j) P_j``."""
        out = np.zeros((self.source_dim, self.source_dim), dtype=np.complex128)
        for g in self.groups:
            out += func(g.eigenvalue) * g.projector
        return out

    def __len__(self) -> int:
        return len(self.groups)


def spectral_decompose(h, group_tol: float = GROUP_TOL, herm_tol: float = HERMITIAN_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix with degenerate eigenvalues grouped.

    Consecutive sorted eigenvalues closer than ``group_tol`` share a group; the
    group's eigenvalue is their mean and its projector the sum of the rank-1
    projectors.
    """
    h = check_hermitian(h, herm_tol)
    vals, vecs = np.linalg.eigh(h)
    groups = []
    start = 0
    n = len(vals)
    for i in range(1, n + 1):
        if i == n or vals[i] - vals[i - 1] > group_tol:
            v = vecs[:, start:i]
            groups.append(SpectralGroup(float(np.mean(vals[start:i])), v @ v.conj().T, i - start))
            start = i
    return SpectralDecomposition(tuple(groups), n)


def herm_expm(h, scale: float) -> np.ndarray:
    """``exp(scale * h)`` for Hermitian ``h`` via its spectral decomposition."""
    return spectral_decompose(h).apply(lambda lam: np.exp(scale * lam))


def psd_sqrt(m) -> np.ndarray:
    """Square root of a positive semidefinite Hermitian matrix; negative rounding noise is clipped."""
    vals, vecs = np.linalg.eigh(check_hermitian(m))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


# Pauli matrices and single-qubit basics.
I2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI = {"sx": SX, "sy": SY, "sz": SZ, "id": I2}


def ket(*amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=np.complex128)
    return v / np.linalg.norm(v)


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())
