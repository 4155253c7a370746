"""Two-qubit Heisenberg model with a z-axis Dzyaloshinskii-Moriya term.

Units: k_B = hbar = 1, so ``beta = 1 / t``.  Basis ordering is
``|00>, |01>, |10>, |11>`` with qubit 1 as subsystem A.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .matcore import SX, SY, SZ, spectral_decompose
from .qmeas import Observable
from .qstate import DensityMatrix, validate_density

log = logging.getLogger(__name__)


class TemperatureError(ValueError):
    pass


@dataclass(frozen=True)
class DMParams:
    j: float
    d: float
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise TemperatureError(f"temperature must be positive, got {self.t!r}")

    @property
    def beta(self) -> float:
        return 1.0 / self.t

    @property
    def delta(self) -> float:
        return 2.0 * self.j * np.sqrt(1.0 + self.d**2)


def build_hamiltonian(p: DMParams) -> Observable:
    """``H = J/2 [sx sx + sy sy + sz sz + D (sx sy - sy sx)]``."""
    h = 0.5 * p.j * (
        np.kron(SX, SX) + np.kron(SY, SY) + np.kron(SZ, SZ) + p.d * (np.kron(SX, SY) - np.kron(SY, SX))
    )
    return Observable.from_matrix(h, f"H(J={p.j}, D={p.d})")


def partition_function(p: DMParams) -> float:
    """``Tr exp(-beta H)`` from the numerical spectrum."""
    dec = build_hamiltonian(p).decomposition
    return float(sum(g.multiplicity * np.exp(-p.beta * g.eigenvalue) for g in dec.groups))


def partition_function_closed(p: DMParams) -> float:
    b, j, dl = p.beta, p.j, p.delta
    return float(2.0 * np.exp(-b * j / 2) * (1.0 + np.exp(b * j) * np.cosh(b * dl / 2)))


def thermal_state(p: DMParams) -> DensityMatrix:
    """Gibbs state ``exp(-beta H) / Z`` computed from the spectral decomposition of H.

    Weights are shifted by the ground energy before exponentiating so low
    temperatures do not overflow.
    """
    dec = build_hamiltonian(p).decomposition
    e0 = dec.groups[0].eigenvalue
    rho = dec.apply(lambda lam: np.exp(-p.beta * (lam - e0)))
    rho /= np.trace(rho).real
    state = validate_density(rho, (2, 2))
    if log.isEnabledFor(logging.DEBUG):
        diag = closed_form_diagnostic(p, state)
        log.debug("closed-form deviation for %s: %s", p, diag)
    return state


def closed_form_state(p: DMParams, reading: str = "corrected") -> np.ndarray:
    """Closed-form X-shaped Gibbs state.

    ``reading="corrected"`` uses ``rho22 = exp(beta(J-delta)/2)(1+exp(beta delta))/2``,
    the form consistent with ``Z``; ``"literal"`` uses ``(1+exp(-beta delta))``.
    The coherence phase is ``arg(1 + iD)``.
    """
    b, j, dl = p.beta, p.j, p.delta
    z = partition_function_closed(p)
    r11 = np.exp(-b * j / 2)
    pref = np.exp(b * (j - dl) / 2)
    if reading == "corrected":
        r22 = pref * (1 + np.exp(b * dl)) / 2
    elif reading == "literal":
        r22 = pref * (1 + np.exp(-b * dl)) / 2
    else:
        raise ValueError(f"unknown reading {reading!r}")
    r23 = np.exp(1j * np.arctan(p.d)) * pref * (1 - np.exp(b * dl)) / 2
    m = np.array(
        [[r11, 0, 0, 0], [0, r22, r23, 0], [0, np.conj(r23), r22, 0], [0, 0, 0, r11]],
        dtype=np.complex128,
    )
    return m / z


def closed_form_diagnostic(p: DMParams, state: DensityMatrix | None = None) -> dict[str, float]:
    """Max-norm distance from the numerical Gibbs state to each closed-form reading."""
    rho = (state or thermal_state(p)).mat
    return {r: float(np.max(np.abs(closed_form_state(p, r) - rho))) for r in ("corrected", "literal")}


def concurrence_closed(p: DMParams) -> float:
    """Closed-form concurrence of the Gibbs state, ``2 max(|rho23| - sqrt(rho11 rho44), 0) / Z``."""
    b, j, dl = p.beta, p.j, p.delta
    z = partition_function_closed(p)
    coherence = 0.5 * abs(np.exp(b * (j - dl) / 2) * (1 - np.exp(b * dl)))
    return float(2.0 / z * max(coherence - np.exp(-b * j / 2), 0.0))


def mixedness_closed(p: DMParams) -> float:
    b, j, dl = p.beta, p.j, p.delta
    num = 4 * np.exp(b * (j + dl)) * (np.cosh(b * j) + 2 * np.cosh(b * dl / 2))
    den = (np.exp(b * (j + dl)) + np.exp(b * j) + 2 * np.exp(b * dl / 2)) ** 2
    return float(num / den)


def spectrum_closed(p: DMParams) -> np.ndarray:
    j, dl = p.j, p.delta
    return np.sort([j / 2, j / 2, (-j + dl) / 2, (-j - dl) / 2])


def energy_levels(p: DMParams) -> np.ndarray:
    """Numerical eigenvalues of H with multiplicity, ascending."""
    dec = spectral_decompose(build_hamiltonian(p).mat)
    return np.repeat(dec.eigenvalues, [g.multiplicity for g in dec.groups])
