"""Variance-based uncertainty relations, forward and reverse, with and without quantum control."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .matcore import DimensionError, anticommutator, commutator
from .qmeas import (
    IMAG_TOL,
    Observable,
    conditional_stats,
    expectation,
    marginal,
    variance,
    variance_covariance,
)
from .qstate import DensityMatrix, purity

VALID_TOL = 1e-9
IDENTITY_TOL = 1e-9
DEFAULT_THETA_GRID = 64
UNDEFINED_L = 1e-12


class SingularBoundError(ValueError):
    """The bound's denominator vanishes."""


class ZeroVarianceError(ValueError):
    pass


class DegenerateAuxiliaryError(ValueError):
    """``<B^H B>`` is too small for the auxiliary operator to exist."""


class RadicandError(ValueError):
    pass


class PairingError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    """Evaluation of one uncertainty relation.

    ``slack`` is ``bound - lhs`` for upper bounds and ``lhs - bound`` for lower
    bounds; the relation holds when ``slack >= -1e-9``.
    """

    lhs: float
    bound: float
    sense: str
    choices: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.bound - self.lhs if self.sense == "upper" else self.lhs - self.bound

    @property
    def valid(self) -> bool:
        return self.slack >= -VALID_TOL


def _centered(rho: DensityMatrix, q: Observable) -> np.ndarray:
    return q.mat - expectation(rho, q) * np.eye(q.dim)


def _mean(rho: DensityMatrix, m) -> complex:
    return complex(np.trace(rho.mat @ m))


def _dims(rho: DensityMatrix, *obs: Observable) -> None:
    for q in obs:
        if q.dim != rho.dim:
            raise DimensionError(f"observable dim {q.dim} does not match state dim {rho.dim}")


def sur_bound(rho: DensityMatrix, a: Observable, b: Observable) -> BoundReport:
    """Schrödinger relation ``dA^2 dB^2 >= |<[A,B]>|^2/4 + |<{A', B'}>|^2/4``."""
    _dims(rho, a, b)
    ca, cb = _centered(rho, a), _centered(rho, b)
    comm = _mean(rho, commutator(a.mat, b.mat))
    anti = _mean(rho, anticommutator(ca, cb))
    lhs = variance(rho, a) * variance(rho, b)
    return BoundReport(lhs, 0.25 * abs(comm) ** 2 + 0.25 * abs(anti) ** 2, "lower")


def unified_identity_residual(rho: DensityMatrix, a: Observable, b: Observable, floor: float = 1e-12) -> float:
    """``|LHS - RHS|`` of the auxiliary-operator identity for the centred pair.

    With ``A = a - <a>``, ``B = b - <b>`` and ``C = A - (<B^H A>/<B^H B>) B``::

        <A^H A><B^H B> = |i<A^H B - B^H A>|^2/4 + |i<A^H B + B^H A>|^2/4 + <B^H B><C^H C>
    """
    _dims(rho, a, b)
    A, B = _centered(rho, a), _centered(rho, b)
    Ah, Bh = A.conj().T, B.conj().T
    bb = _mean(rho, Bh @ B).real
    if bb <= floor:
        raise DegenerateAuxiliaryError(f"<B^H B> = {bb:.3e} is below {floor:.0e}")
    C = A - (_mean(rho, Bh @ A) / bb) * B
    lhs = _mean(rho, Ah @ A).real * bb
    rhs = (
        0.25 * abs(1j * _mean(rho, Ah @ B - Bh @ A)) ** 2
        + 0.25 * abs(1j * _mean(rho, Ah @ B + Bh @ A)) ** 2
        + bb * _mean(rho, C.conj().T @ C).real
    )
    return abs(lhs - rhs)


def mondal_reverse_bound(rho: DensityMatrix, a: Observable, b: Observable, floor: float = 1e-12) -> BoundReport:
    """``dA^2 + dB^2 <= 2 d(A-B)^2 / (1 - cov/(dA dB)) - 2 dA dB``."""
    _dims(rho, a, b)
    va, vb, cov = variance_covariance(rho, a, b)
    sa, sb = np.sqrt(va), np.sqrt(vb)
    if sa * sb <= floor:
        raise ZeroVarianceError(f"dA*dB = {sa * sb:.3e}")
    denom = 1.0 - cov / (sa * sb)
    if abs(denom) <= 1e-9:
        raise SingularBoundError(f"cov equals dA*dB (1 - cov/(dA dB) = {denom:.3e})")
    diff = Observable.from_matrix(a.mat - b.mat)
    bound = 2.0 * variance(rho, diff) / denom - 2.0 * sa * sb
    return BoundReport(va + vb, bound, "upper", details={"cov": cov})


def purity_reverse_bound(rho: DensityMatrix, a: Observable, b: Observable, mode: str = "sqrt") -> BoundReport:
    """Purity-weighted reverse bound on ``dA^2 + dB^2``.

    For each sign ``s`` with ``X_s = (A' + s i B')(A' - s i B')``::

        sqrt:   sqrt(Tr rho^2) sqrt(Tr X_s^2) + s i <[A, B]>
        linear: sqrt(Tr rho^2) Tr X_s       + s i <[A, B]>

    Both branches are upper bounds; the smaller is reported.
    """
    if mode not in ("sqrt", "linear"):
        raise ValueError(f"unknown mode {mode!r}")
    _dims(rho, a, b)
    ca, cb = _centered(rho, a), _centered(rho, b)
    root_purity = np.sqrt(purity(rho))
    comm = _mean(rho, commutator(a.mat, b.mat))
    branches = {}
    for s in (+1, -1):
        x = (ca + s * 1j * cb) @ (ca - s * 1j * cb)
        core = np.sqrt(np.trace(x @ x).real) if mode == "sqrt" else np.trace(x).real
        shift = s * 1j * comm
        if abs(shift.imag) > IMAG_TOL:
            raise ValueError(f"i<[A,B]> has imaginary part {shift.imag:.3e}")
        branches[s] = float(root_purity * core + shift.real)
    sign = min(branches, key=lambda s: (branches[s], -s))
    lhs = variance(rho, a) + variance(rho, b)
    return BoundReport(
        lhs,
        branches[sign],
        "upper",
        choices={"sign": "+" if sign > 0 else "-", "mode": mode},
        details={"branches": {"+": branches[1], "-": branches[-1]}},
    )


def _phase_grid(k: int, n: int) -> np.ndarray:
    """Lexicographic grid of phase vectors with the first phase pinned to 0."""
    steps = 2.0 * np.pi * np.arange(n) / n
    if k == 1:
        return np.zeros((1, 1))
    rest = np.array(list(itertools.product(steps, repeat=k - 1)))
    return np.hstack([np.zeros((len(rest), 1)), rest])


def _multi_terms(rho: DensityMatrix, centred: list[np.ndarray], thetas: np.ndarray):
    """Vectorised ``<Y^H Y>``, cross term ``G`` and ``Tr[(Y^H Y)^2]`` over rows of ``thetas``."""
    k = len(centred)
    stack = np.stack(centred)  # (k, d, d)
    phases = np.exp(1j * thetas)  # (n, k)
    Y = np.einsum("nk,kij->nij", phases, stack)
    YhY = np.conj(np.swapaxes(Y, 1, 2)) @ Y
    mean_yhy = np.einsum("ij,nji->n", rho.mat, YhY)
    tr_sq = np.einsum("nij,nji->n", YhY, YhY).real
    moments = np.einsum("ab,kbc,lca->kl", rho.mat, stack, stack)  # <A_k A_l>
    cross = np.zeros(len(thetas))
    for i in range(k):
        for j in range(i + 1, k):
            rel = np.exp(1j * (thetas[:, j] - thetas[:, i]))
            cross += (rel * moments[i, j] + np.conj(rel) * moments[j, i]).real
    return mean_yhy, cross, tr_sq, YhY


def _experimental_m(rho: DensityMatrix, yhy: np.ndarray) -> float:
    """Auxiliary-operator correction ``M`` (experimental reading).

    ``F1 = Y^H Y``; ``F2 = F1 - Tr(rho F1) rho / Tr(rho^2)`` removes the
    component of ``F1`` along ``O1 = rho``; the second auxiliary operator is
    taken as ``O2 = F2`` so ``M = |Tr(O2^H F2)|^2 / Tr(O2^H O2) = Tr(F2^2)``.
    """
    p = purity(rho)
    f2 = yhy - (np.trace(rho.mat @ yhy).real / p) * rho.mat
    o2 = f2
    norm = np.trace(o2.conj().T @ o2).real
    if norm <= 1e-300:
        return 0.0
    return float(abs(np.trace(o2.conj().T @ f2)) ** 2 / norm)


def multi_reverse_bound(
    rho: DensityMatrix,
    obs: Sequence[Observable],
    phases: Sequence[float] | None = None,
    m_mode: str = "zero",
    theta_grid: int = DEFAULT_THETA_GRID,
    refine: bool = False,
) -> BoundReport:
    """Phase-parameterised reverse bound on ``sum_k dA_k^2``.

    With ``Y(theta) = sum_k exp(i theta_k) A'_k``::

        bound(theta) = -G(theta) + sqrt(Tr rho^2 (Tr[(Y^H Y)^2] - M))

    where ``G`` is the cross term so that ``sum_k dA_k^2 = <Y^H Y> - G`` for
    every ``theta``.  ``phases=None`` searches a ``theta_grid``-point grid per
    phase (first phase fixed to 0, ties to the lexicographically smallest
    vector), optionally refined with Nelder-Mead.  ``m_mode="zero"`` is the
    certified bound; ``"experimental"`` subtracts the auxiliary-operator term
    and is flagged non-certified.
    """
    if not obs:
        raise ValueError("need at least one observable")
    if m_mode not in ("zero", "experimental"):
        raise ValueError(f"unknown m_mode {m_mode!r}")
    _dims(rho, *obs)
    k = len(obs)
    centred = [_centered(rho, q) for q in obs]
    lhs = sum(variance(rho, q) for q in obs)
    p = purity(rho)

    def evaluate(thetas: np.ndarray):
        mean_yhy, cross, tr_sq, yhy = _multi_terms(rho, centred, thetas)
        if m_mode == "zero":
            m = np.zeros(len(thetas))
        else:
            m = np.array([_experimental_m(rho, y) for y in yhy])
        rad = p * (tr_sq - m)
        scale = p * tr_sq
        tiny = (rad < 0) & (rad >= -1e-12 * np.maximum(scale, 1.0))
        rad = np.where(tiny, 0.0, rad)
        return -cross + np.sqrt(np.where(rad < 0, np.nan, rad)), mean_yhy, cross, rad, m

    if phases is not None:
        thetas = np.asarray(phases, dtype=float).reshape(1, -1)
        if thetas.shape[1] != k:
            raise ValueError(f"{thetas.shape[1]} phases for {k} observables")
        search = "fixed"
    else:
        thetas = _phase_grid(k, theta_grid)
        search = f"grid{theta_grid}"

    best_val, best_theta = np.inf, None
    chunk = 16384
    for start in range(0, len(thetas), chunk):
        block = thetas[start : start + chunk]
        vals, _, _, rad, _ = evaluate(block)
        if np.any(rad < 0):
            i = int(np.argmax(rad < 0))
            raise RadicandError(f"negative radicand {rad[i]:.3e} at theta={block[i].tolist()}")
        i = int(np.argmin(vals))  # first minimum = lexicographically smallest
        if vals[i] < best_val:
            best_val, best_theta = float(vals[i]), block[i].copy()

    if refine and phases is None and k > 1:
        from scipy.optimize import minimize

        def f(rest):
            return float(evaluate(np.concatenate([[0.0], rest])[None, :])[0][0])

        res = minimize(f, best_theta[1:], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13})
        if res.fun < best_val:
            best_val, best_theta = float(res.fun), np.concatenate([[0.0], res.x])
            search += "+nm"

    best_theta = np.mod(best_theta, 2.0 * np.pi)
    vals, mean_yhy, cross, rad, m = evaluate(best_theta[None, :])
    mean_yhy = mean_yhy[0]
    if abs(mean_yhy.imag) > IMAG_TOL:
        raise ValueError(f"<Y^H Y> has imaginary part {mean_yhy.imag:.3e}")
    residual = abs(mean_yhy.real - cross[0] - lhs)
    if residual > IDENTITY_TOL:
        raise AssertionError(f"cross-term identity failed, residual {residual:.3e}")
    return BoundReport(
        lhs,
        float(vals[0]),
        "upper",
        choices={
            "thetas": best_theta.tolist(),
            "m_mode": m_mode,
            "search": search,
            "certified": m_mode == "zero",
        },
        details={"cross_term": float(cross[0]), "m": float(m[0]), "identity_residual": residual},
    )


U_TRA_MODES = ("eq8", "eq9", "eq10", "mondal")


def traditional_bound(
    rho: DensityMatrix,
    obs: Sequence[Observable],
    mode: str,
    m_mode: str = "zero",
    theta_grid: int = DEFAULT_THETA_GRID,
) -> float:
    """Unconditional reverse bound ``U_tra`` on ``sum_k dQ_k^2``.

    Two-observable modes are applied to consecutive pairs ``(Q1, Q2), (Q3, Q4)...``
    and summed.
    """
    if mode == "eq10":
        return multi_reverse_bound(rho, obs, m_mode=m_mode, theta_grid=theta_grid).bound
    if mode not in U_TRA_MODES:
        raise ValueError(f"unknown bound mode {mode!r}")
    if len(obs) < 2 or len(obs) % 2:
        raise PairingError(f"mode {mode} needs an even number (>= 2) of observables, got {len(obs)}")
    total = 0.0
    for a, b in zip(obs[::2], obs[1::2]):
        if mode == "mondal":
            total += mondal_reverse_bound(rho, a, b).bound
        else:
            total += purity_reverse_bound(rho, a, b, "sqrt" if mode == "eq8" else "linear").bound
    return total


def conditional_reverse_report(
    rho_ac: DensityMatrix,
    pairs: Sequence[tuple[Observable, Observable]],
    u_tra_mode: str = "eq10",
    m_mode: str = "zero",
    theta_grid: int = DEFAULT_THETA_GRID,
) -> BoundReport:
    """Quantum-control-assisted reverse relation ``L <= W``.

    ``L = sum_k E[V(Q_k | O_k)]`` and ``W = U_tra - sum_k V[E(Q_k | O_k)]``
    with ``U_tra`` evaluated on the marginal of A.  ``details["u"]`` is
    ``W / L`` or ``None`` when ``L <= 1e-12``.
    """
    if not pairs:
        raise PairingError("need at least one (Q, O) pair")
    stats = [conditional_stats(rho_ac, q, o) for q, o in pairs]
    rho_a = marginal(rho_ac)
    qs = [q for q, _ in pairs]
    u_tra = traditional_bound(rho_a, qs, u_tra_mode, m_mode=m_mode, theta_grid=theta_grid)
    l_value = sum(s.expected_conditional_variance for s in stats)
    sum_vev = sum(s.variance_of_conditional_expectation for s in stats)
    sum_var = sum(s.total_variance for s in stats)
    w = u_tra - sum_vev
    u = w / l_value if l_value > UNDEFINED_L else None
    return BoundReport(
        l_value,
        w,
        "upper",
        choices={"u_tra_mode": u_tra_mode, "m_mode": m_mode},
        details={
            "u_tra": u_tra,
            "u": u,
            "sum_var_of_cond_exp": sum_vev,
            "sum_marginal_var": sum_var,
            "purity_marginal": purity(rho_a),
            # W - L must equal U_tra - sum V(Q_k) by the law of total variance
            "equivalence_residual": abs((w - l_value) - (u_tra - sum_var)),
        },
    )
