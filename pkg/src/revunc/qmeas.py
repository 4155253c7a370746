"""Expectations, variances and statistics conditioned on a projective measurement of C."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import (
    PAULI,
    DimensionError,
    SpectralDecomposition,
    check_hermitian,
    partial_trace,
    spectral_decompose,
)
from .qstate import DensityMatrix, validate_density

IMAG_TOL = 1e-9
NEGATIVE_VARIANCE_TOL = 1e-10
PROBABILITY_FLOOR = 1e-12
IDENTITY_TOL = 1e-9


class ImaginaryResidueError(ValueError):
    pass


class IdentityViolation(AssertionError):
    """A conditional-statistics identity failed beyond tolerance."""


@dataclass(frozen=True, eq=False)
class Observable:
    mat: np.ndarray
    decomposition: SpectralDecomposition
    label: str = ""

    @classmethod
    def from_matrix(cls, m, label: str = "") -> "Observable":
        h = check_hermitian(m)
        h.setflags(write=False)
        dec = spectral_decompose(h)
        return cls(h, dec, label)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __repr__(self) -> str:
        return f"Observable({self.label or 'dim=%d' % self.dim})"


def pauli(name: str) -> Observable:
    return Observable.from_matrix(PAULI[name], name)


def bloch_observable(polar: float, azimuth: float) -> Observable:
    """Single-qubit spin observable ``n . sigma`` along the unit vector (polar, azimuth)."""
    n = (np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar))
    m = n[0] * PAULI["sx"] + n[1] * PAULI["sy"] + n[2] * PAULI["sz"]
    return Observable.from_matrix(m, f"{polar!r}:{azimuth!r}")


def _check_dims(rho: DensityMatrix, *obs: Observable) -> None:
    for q in obs:
        if q.dim != rho.dim:
            raise DimensionError(f"observable dim {q.dim} does not match state dim {rho.dim}")


def _real_trace(m) -> float:
    t = np.trace(m)
    if abs(t.imag) > IMAG_TOL:
        raise ImaginaryResidueError(f"expectation has imaginary part {t.imag:.3e}")
    return float(t.real)


def expectation(rho: DensityMatrix, q: Observable) -> float:
    """``Re Tr(rho q)``."""
    _check_dims(rho, q)
    return _real_trace(rho.mat @ q.mat)


def variance(rho: DensityMatrix, q: Observable) -> float:
    _check_dims(rho, q)
    mean = _real_trace(rho.mat @ q.mat)
    var = _real_trace(rho.mat @ q.mat @ q.mat) - mean * mean
    return max(var, 0.0) if var >= -NEGATIVE_VARIANCE_TOL else var


def variance_covariance(rho: DensityMatrix, a: Observable, b: Observable) -> tuple[float, float, float]:
    """Return ``(var_a, var_b, cov)`` with ``cov = <{a, b}>/2 - <a><b>``."""
    _check_dims(rho, a, b)
    ma, mb = expectation(rho, a), expectation(rho, b)
    cov = 0.5 * _real_trace(rho.mat @ (a.mat @ b.mat + b.mat @ a.mat)) - ma * mb
    return variance(rho, a), variance(rho, b), cov


@dataclass(frozen=True)
class MeasurementOutcome:
    eigenvalue: float
    probability: float
    conditional_state_a: DensityMatrix
    projector_rank: int = 1


@dataclass(frozen=True)
class ControlMeasurement:
    outcomes: tuple[MeasurementOutcome, ...]
    omitted: tuple[tuple[float, float], ...]
    """(eigenvalue, probability) of branches dropped below the probability floor."""

    def __iter__(self):
        return iter(self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)


def control_measure(
    rho_ac: DensityMatrix, o: Observable, probability_floor: float = PROBABILITY_FLOOR
) -> ControlMeasurement:
    """Measure ``o`` on subsystem C and return the reduced states of A per outcome.

    Each spectral group ``P_j`` of ``o`` (degenerate eigenvalues included)
    yields probability ``Tr[(I x P_j) rho (I x P_j)]`` and conditional state
    ``Tr_C[(I x P_j) rho (I x P_j)] / p_j``.
    """
    dim_a, dim_c = rho_ac.require_bipartite()
    if o.dim != dim_c:
        raise DimensionError(f"control observable dim {o.dim} does not match dim_c {dim_c}")
    eye_a = np.eye(dim_a)
    outcomes, omitted = [], []
    for g in o.decomposition.groups:
        proj = np.kron(eye_a, g.projector)
        post = proj @ rho_ac.mat @ proj
        p = float(np.trace(post).real)
        if p <= probability_floor:
            omitted.append((g.eigenvalue, p))
            continue
        reduced = validate_density(partial_trace(post, dim_a, dim_c, keep="A") / p)
        outcomes.append(MeasurementOutcome(g.eigenvalue, p, reduced, g.multiplicity))
    return ControlMeasurement(tuple(outcomes), tuple(omitted))


@dataclass(frozen=True)
class ConditionalOutcome:
    eigenvalue: float
    probability: float
    conditional_mean: float
    conditional_variance: float
    conditional_state_a: DensityMatrix


@dataclass(frozen=True)
class ConditionalStats:
    outcomes: tuple[ConditionalOutcome, ...]
    expected_conditional_variance: float
    variance_of_conditional_expectation: float
    total_variance: float
    marginal_mean: float
    omitted: tuple[tuple[float, float], ...] = ()

    @property
    def total_variance_residual(self) -> float:
        return abs(self.total_variance - self.expected_conditional_variance - self.variance_of_conditional_expectation)

    @property
    def total_expectation_residual(self) -> float:
        return abs(self.marginal_mean - sum(o.probability * o.conditional_mean for o in self.outcomes))


def marginal(rho_ac: DensityMatrix, keep: str = "A") -> DensityMatrix:
    dim_a, dim_c = rho_ac.require_bipartite()
    return validate_density(partial_trace(rho_ac.mat, dim_a, dim_c, keep=keep))


def conditional_stats(
    rho_ac: DensityMatrix,
    q: Observable,
    o: Observable,
    probability_floor: float = PROBABILITY_FLOOR,
    check: bool = True,
) -> ConditionalStats:
    """Conditional statistics of ``q`` on A given a measurement of ``o`` on C.

    ``expected_conditional_variance`` is ``sum_j p_j V(q | j)`` and
    ``variance_of_conditional_expectation`` is ``sum_j p_j (m_j - m)^2`` with
    ``m = sum_j p_j m_j`` taken from the outcome table.  ``total_variance`` and
    ``marginal_mean`` come from ``Tr_C rho`` independently, so the law of total
    variance and of total expectation are real cross-checks.  With
    ``check=True`` a violation beyond 1e-9 raises IdentityViolation.
    """
    dim_a, _ = rho_ac.require_bipartite()
    if q.dim != dim_a:
        raise DimensionError(f"observable dim {q.dim} does not match dim_a {dim_a}")
    meas = control_measure(rho_ac, o, probability_floor)
    rows = []
    for out in meas.outcomes:
        st = out.conditional_state_a
        rows.append(ConditionalOutcome(out.eigenvalue, out.probability, expectation(st, q), variance(st, q), st))
    probs = np.array([r.probability for r in rows])
    means = np.array([r.conditional_mean for r in rows])
    variances = np.array([r.conditional_variance for r in rows])
    mbar = float(probs @ means)
    evq = float(probs @ variances)
    vev = float(probs @ (means - mbar) ** 2)

    rho_a = marginal(rho_ac)
    stats = ConditionalStats(
        outcomes=tuple(rows),
        expected_conditional_variance=evq,
        variance_of_conditional_expectation=vev,
        total_variance=variance(rho_a, q),
        marginal_mean=expectation(rho_a, q),
        omitted=meas.omitted,
    )
    if check:
        if stats.total_variance_residual > IDENTITY_TOL:
            raise IdentityViolation(f"law of total variance residual {stats.total_variance_residual:.3e}")
        if stats.total_expectation_residual > IDENTITY_TOL:
            raise IdentityViolation(f"law of total expectation residual {stats.total_expectation_residual:.3e}")
    return stats


def optimal_control(rho_ac: DensityMatrix, q: Observable, grid: int = 48) -> Observable:
    """Spin observable on a qubit C that maximises ``V[E(q | O)]``.

    Uses ``p_+- = (1 +- n.c)/2`` and ``p_+- m_+- = (<q> +- n.t)/2`` with ``c``
    the Bloch vector of C and ``t_i = <q x sigma_i>``; a polar/azimuth grid
    search is refined with Nelder-Mead.
    """
    from scipy.optimize import minimize

    dim_a, dim_c = rho_ac.require_bipartite()
    if dim_c != 2:
        raise DimensionError("optimal control is implemented for a qubit control system")
    sig = [PAULI["sx"], PAULI["sy"], PAULI["sz"]]
    eye_a = np.eye(dim_a)
    c = np.array([np.trace(rho_ac.mat @ np.kron(eye_a, s)).real for s in sig])
    t = np.array([np.trace(rho_ac.mat @ np.kron(q.mat, s)).real for s in sig])
    mq = float(np.trace(rho_ac.mat @ np.kron(q.mat, np.eye(2))).real)

    def neg_vev(angles):
        th, ph = np.atleast_1d(angles[0]), np.atleast_1d(angles[1])
        n = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        nc, nt = n @ c, n @ t
        out = -mq * mq * np.ones_like(nc)
        for s in (1.0, -1.0):
            p = 0.5 * (1 + s * nc)
            pm = 0.5 * (mq + s * nt)
            out += np.where(p > PROBABILITY_FLOOR, pm * pm / np.maximum(p, PROBABILITY_FLOOR), 0.0)
        return -out

    th, ph = np.meshgrid(np.linspace(0, np.pi, grid), np.linspace(0, 2 * np.pi, 2 * grid, endpoint=False), indexing="ij")
    vals = neg_vev((th.ravel(), ph.ravel()))
    i = int(np.argmin(vals))
    x0 = np.array([th.ravel()[i], ph.ravel()[i]])
    res = minimize(lambda x: float(neg_vev(x)[0]), x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    best = res.x if res.fun <= vals[i] else x0
    return bloch_observable(float(best[0]), float(best[1]))
