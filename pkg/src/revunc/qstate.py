"""Validated density matrices, mixedness, two-qubit concurrence and seeded random states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matcore import (
    HERMITIAN_TOL,
    SY,
    DimensionError,
    as_matrix,
    check_hermitian,
    psd_sqrt,
)

TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


class TraceError(ValueError):
    pass


class PositivityError(ValueError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian, positive semidefinite, unit-trace matrix.

    ``structure`` is the optional bipartite split ``(dim_a, dim_c)``.  ``flags``
    records repairs made during validation (e.g. ``"clamped"`` when tiny
    negative eigenvalues were set to zero).
    """

    mat: np.ndarray
    structure: tuple[int, int] | None = None
    flags: tuple[str, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def require_bipartite(self) -> tuple[int, int]:
        if self.structure is None:
            raise DimensionError("state carries no bipartite structure")
        return self.structure


def validate_density(m, structure: tuple[int, int] | None = None) -> DensityMatrix:
    """Check ``m`` is a density matrix and wrap it.

    Negative eigenvalues no smaller than ``-POSITIVITY_TOL`` are treated as
    rounding: they are clamped to zero, the matrix is rebuilt and renormalised,
    and the ``"clamped"`` flag is set.
    """
    m = check_hermitian(as_matrix(m), HERMITIAN_TOL)
    if structure is not None:
        dim_a, dim_c = structure
        if dim_a < 1 or dim_c < 1 or dim_a * dim_c != m.shape[0]:
            raise DimensionError(f"split {structure} does not match dim {m.shape[0]}")
        structure = (int(dim_a), int(dim_c))
    tr = np.trace(m).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceError(f"trace is {tr!r}, expected 1")
    vals, vecs = np.linalg.eigh(m)
    flags: tuple[str, ...] = ()
    if vals[0] < -POSITIVITY_TOL:
        raise PositivityError(f"minimum eigenvalue {vals[0]:.3e} is negative")
    if vals[0] < 0.0:
        vals = np.clip(vals, 0.0, None)
        vals /= vals.sum()
        m = (vecs * vals) @ vecs.conj().T
        m = 0.5 * (m + m.conj().T)
        flags = ("clamped",)
    m.setflags(write=False)
    return DensityMatrix(m, structure, flags)


def purity(rho: DensityMatrix) -> float:
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(rho.mat) ** 2))


@dataclass(frozen=True)
class MixednessReport:
    purity: float
    gamma: float


def mixedness(rho: DensityMatrix) -> MixednessReport:
    """Purity ``Tr rho^2`` and mixedness ``gamma = 1 - Tr rho^2``."""
    p = purity(rho)
    return MixednessReport(purity=p, gamma=1.0 - p)


_YY = np.kron(SY, SY)


def concurrence_wootters(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state.

    The square roots of the eigenvalues of ``rho (sy x sy) rho* (sy x sy)`` are
    obtained as the singular values of ``sqrt(rho) sqrt(rho_tilde)``, which
    avoids taking square roots of eigenvalues polluted by rounding.
    """
    if rho.dim != 4:
        raise DimensionError(f"concurrence needs a two-qubit state, got dim {rho.dim}")
    rho_tilde = _YY @ rho.mat.conj() @ _YY
    s = np.linalg.svd(psd_sqrt(rho.mat) @ psd_sqrt(rho_tilde), compute_uv=False)
    s = np.sort(s)[::-1]
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and a spawn path.

    Streams for different paths are independent and do not depend on the order
    in which they are created, so per-task streams are schedule independent.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_state(
    seed: int | np.random.Generator,
    dim: int,
    rank: int | None = None,
    structure: tuple[int, int] | None = None,
) -> DensityMatrix:
    """Random state ``G G^H / Tr(G G^H)`` with ``G`` a ``dim x rank`` complex Gaussian matrix."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    g = complex_normal(rng, (dim, rank))
    m = g @ g.conj().T
    return validate_density(m / np.trace(m).real, structure)


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = complex_normal(rng, (dim, dim))
    return 0.5 * (g + g.conj().T)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    q, r = np.linalg.qr(complex_normal(rng, (dim, dim)))
    d = np.diag(r)
    return q * (d / np.abs(d))
