"""Randomised property audits of the conditional statistics and every uncertainty relation."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bounds import (
    IDENTITY_TOL,
    VALID_TOL,
    DegenerateAuxiliaryError,
    SingularBoundError,
    ZeroVarianceError,
    conditional_reverse_report,
    mondal_reverse_bound,
    multi_reverse_bound,
    purity_reverse_bound,
    sur_bound,
    unified_identity_residual,
)
from .qmeas import Observable, conditional_stats, marginal
from .qstate import random_hermitian, random_state, random_unitary, rng_for

# (name, kind, certified): kind "residual" passes at <= 1e-9, "slack" at >= -1e-9
PROPERTIES = (
    ("total_expectation", "residual", True),
    ("total_variance", "residual", True),
    ("auxiliary_identity", "residual", True),
    ("schrodinger_lower", "slack", True),
    ("mondal_reverse", "slack", True),
    ("purity_sqrt", "slack", True),
    ("purity_linear", "slack", True),
    ("multi_phase", "slack", True),
    ("multi_cross_term_identity", "residual", True),
    ("conditional_eq8", "slack", True),
    ("conditional_eq9", "slack", True),
    ("conditional_eq10", "slack", True),
    ("conditional_equivalence", "residual", True),
    ("multi_experimental_m", "slack", False),
)
_KIND = {name: (kind, cert) for name, kind, cert in PROPERTIES}


def _random_control(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random Hermitian, with a forced degenerate spectrum a quarter of the time."""
    if dim > 2 and rng.random() < 0.25:
        vals = rng.standard_normal(dim)
        vals[1] = vals[0]
        u = random_unitary(rng, dim)
        return (u * vals) @ u.conj().T
    return random_hermitian(rng, dim)


def _matrix_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def audit_trial(seed: int, index: int, split: tuple[int, int], experimental: bool = False) -> dict:
    """Run every property on one random instance; returns ``{property: [value, ...]}`` plus the inputs."""
    rng = rng_for(seed, index)
    dim_a, dim_c = split
    dim = dim_a * dim_c
    rank = int(rng.integers(1, dim + 1))
    rho_ac = random_state(rng, dim, rank, structure=split)
    rho_a = marginal(rho_ac)
    q1, q2 = (Observable.from_matrix(random_hermitian(rng, dim_a)) for _ in range(2))
    o1, o2 = (Observable.from_matrix(_random_control(rng, dim_c)) for _ in range(2))
    a_full, b_full = (Observable.from_matrix(random_hermitian(rng, dim)) for _ in range(2))
    k_multi = 1 + index % 3
    multi_full = [Observable.from_matrix(random_hermitian(rng, dim)) for _ in range(k_multi)]

    out: dict[str, list[float]] = {name: [] for name, _, _ in PROPERTIES}
    skipped: dict[str, int] = {}

    for q, o in ((q1, o1), (q2, o2)):
        st = conditional_stats(rho_ac, q, o, check=False)
        out["total_expectation"].append(st.total_expectation_residual)
        out["total_variance"].append(st.total_variance_residual)

    for rho, a, b in ((rho_a, q1, q2), (rho_ac, a_full, b_full)):
        try:
            out["auxiliary_identity"].append(unified_identity_residual(rho, a, b))
        except DegenerateAuxiliaryError:
            skipped["auxiliary_identity"] = skipped.get("auxiliary_identity", 0) + 1
        out["schrodinger_lower"].append(sur_bound(rho, a, b).slack)
        try:
            out["mondal_reverse"].append(mondal_reverse_bound(rho, a, b).slack)
        except (SingularBoundError, ZeroVarianceError):
            skipped["mondal_reverse"] = skipped.get("mondal_reverse", 0) + 1
        out["purity_sqrt"].append(purity_reverse_bound(rho, a, b, "sqrt").slack)
        out["purity_linear"].append(purity_reverse_bound(rho, a, b, "linear").slack)

    for rho, obs in ((rho_a, [q1, q2]), (rho_ac, multi_full)):
        rep = multi_reverse_bound(rho, obs)
        out["multi_phase"].append(rep.slack)
        out["multi_cross_term_identity"].append(rep.details["identity_residual"])
        fixed = multi_reverse_bound(rho, obs, phases=rng.uniform(0, 2 * np.pi, len(obs)))
        out["multi_phase"].append(fixed.slack)
        out["multi_cross_term_identity"].append(fixed.details["identity_residual"])
        if experimental:
            out["multi_experimental_m"].append(multi_reverse_bound(rho, obs, m_mode="experimental").slack)

    for mode in ("eq8", "eq9", "eq10"):
        rep = conditional_reverse_report(rho_ac, [(q1, o1), (q2, o2)], mode)
        out[f"conditional_{mode}"].append(rep.slack)
        out["conditional_equivalence"].append(rep.details["equivalence_residual"])

    return {
        "index": index,
        "split": list(split),
        "values": out,
        "skipped": skipped,
        "rho": _matrix_json(rho_ac.mat),
    }


def _trial_task(args):
    return audit_trial(*args)


@dataclass
class PropertyResult:
    name: str
    certified: bool
    kind: str
    evaluations: int = 0
    trials: int = 0
    skipped: int = 0
    worst: float | None = None
    failures: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "certified": self.certified,
            "kind": self.kind,
            "evaluations": self.evaluations,
            "trials": self.trials,
            "skipped": self.skipped,
            "passed": self.passed,
            "failures": self.failures,
        }
        d["max_residual" if self.kind == "residual" else "min_slack"] = self.worst
        return d


@dataclass
class AuditReport:
    seed: int
    trials: int
    dims: list[tuple[int, int]]
    properties: list[PropertyResult]

    @property
    def certified(self) -> list[PropertyResult]:
        return [p for p in self.properties if p.certified]

    @property
    def non_certified(self) -> list[PropertyResult]:
        return [p for p in self.properties if not p.certified]

    @property
    def ok(self) -> bool:
        return all(p.passed for p in self.certified)

    def get(self, name: str) -> PropertyResult:
        return next(p for p in self.properties if p.name == name)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "dims": [list(d) for d in self.dims],
            "certified": [p.to_dict() for p in self.certified],
            "non_certified": [p.to_dict() for p in self.non_certified],
            "ok": self.ok,
        }

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="ascii")
        return path

    def summary_lines(self) -> list[str]:
        lines = []
        for section, props in (("certified", self.certified), ("non-certified", self.non_certified)):
            if not props:
                continue
            lines.append(f"[{section}]")
            for p in props:
                label = "max residual" if p.kind == "residual" else "min slack"
                worst = "n/a" if p.worst is None else f"{p.worst:.3e}"
                status = "PASS" if p.passed else f"FAIL ({len(p.failures)})"
                lines.append(f"  {p.name:30s} {status:10s} n={p.evaluations:<6d} {label} {worst}")
        return lines


def run_audit(
    seed: int,
    trials: int,
    dims: Sequence[tuple[int, int]] = ((2, 2),),
    experimental: bool = False,
    workers: int = 1,
) -> AuditReport:
    """Evaluate all properties on ``trials`` random instances cycling through ``dims``.

    Instance ``i`` draws from the stream ``(seed, i)`` so results do not depend
    on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not dims:
        raise ValueError("need at least one bipartite split")
    dims = [tuple(int(x) for x in d) for d in dims]
    tasks = [(seed, i, dims[i % len(dims)], experimental) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_task, tasks, chunksize=max(1, trials // (4 * workers))))
    else:
        results = [_trial_task(t) for t in tasks]

    props = []
    for name, kind, cert in PROPERTIES:
        if name == "multi_experimental_m" and not experimental:
            continue
        pr = PropertyResult(name, cert, kind)
        for res in results:
            vals = res["values"][name]
            pr.skipped += res["skipped"].get(name, 0)
            if not vals:
                continue
            pr.trials += 1
            pr.evaluations += len(vals)
            worst = max(vals) if kind == "residual" else min(vals)
            if pr.worst is None or (worst > pr.worst if kind == "residual" else worst < pr.worst):
                pr.worst = worst
            bad = worst > IDENTITY_TOL if kind == "residual" else worst < -VALID_TOL
            if bad:
                pr.failures.append(
                    {"seed": seed, "index": res["index"], "split": res["split"], "value": worst, "rho": res["rho"]}
                )
        props.append(pr)
    return AuditReport(seed, trials, dims, props)
