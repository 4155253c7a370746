"""Parameter sweeps over (J, D, T), figure tables and the text table format.

Table format: ``#``-prefixed header lines (version, JSON-encoded spec,
diagnostics), one comma-separated header row, then one data row per line.
Reals use 17 significant digits, booleans ``true``/``false``, an undefined
tightness ``NA``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .bounds import VALID_TOL, conditional_reverse_report
from .dmmodel import DMParams, thermal_state
from .qmeas import Observable, bloch_observable, optimal_control, pauli
from .qstate import concurrence_wootters, mixedness


class SpecError(ValueError):
    pass


class CertificationError(RuntimeError):
    """A row violated W >= L; ``counterexample`` holds the offending inputs."""

    def __init__(self, message: str, counterexample: dict):
        super().__init__(message)
        self.counterexample = counterexample


Range = tuple[float, float, int]


def parse_range(text: str) -> Range:
    """``"a:b:n"`` -> inclusive range with ``n`` points; a bare number is a single point."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return (v, v, 1)
        if len(parts) == 3:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            return (a, b, n)
    except ValueError as exc:
        raise SpecError(f"bad range {text!r}: {exc}") from None
    raise SpecError(f"bad range {text!r}, expected a:b:n")


def range_values(r: Range) -> np.ndarray:
    a, b, n = r
    if n < 1:
        raise SpecError(f"range {r} is empty")
    if n == 1:
        return np.array([float(a)])
    return np.linspace(a, b, int(n))


def parse_observables(text: str) -> tuple[str, ...]:
    """Comma list of ``sx|sy|sz`` or ``polar:azimuth`` tokens (``"optimal"`` allowed for controls)."""
    tokens = tuple(t.strip() for t in text.split(",") if t.strip())
    if not tokens:
        raise SpecError("empty observable list")
    for t in tokens:
        observable_from_token(t) if t != "optimal" else None
    return tokens


def observable_from_token(token: str) -> Observable:
    if token in ("sx", "sy", "sz"):
        return pauli(token)
    try:
        polar, azimuth = (float(x) for x in token.split(":"))
    except ValueError:
        raise SpecError(f"unknown observable {token!r}") from None
    return bloch_observable(polar, azimuth)


@dataclass(frozen=True)
class SweepSpec:
    j_values: Range = (1.0, 1.0, 1)
    d_values: Range = (1.0, 1.0, 1)
    t_values: Range = (1.0, 1.0, 1)
    q: tuple[str, ...] = ("sx", "sz")
    o: tuple[str, ...] | None = None
    bound_mode: str = "eq10"
    m_mode: str = "zero"
    theta_grid: int = 64
    seed: int = 0
    output_path: str | None = None
    workers: int = 1

    def validate(self) -> "SweepSpec":
        for r in (self.j_values, self.d_values, self.t_values):
            range_values(r)
        if min(range_values(self.t_values)) <= 0:
            raise SpecError("temperatures must be positive")
        if self.bound_mode not in ("eq8", "eq9", "eq10", "mondal"):
            raise SpecError(f"unknown bound mode {self.bound_mode!r}")
        if self.m_mode not in ("zero", "experimental"):
            raise SpecError(f"unknown M mode {self.m_mode!r}")
        if self.o is not None and len(self.o) != len(self.q):
            raise SpecError(f"{len(self.q)} observables on A but {len(self.o)} on C")
        if self.bound_mode != "eq10" and len(self.q) % 2:
            raise SpecError(f"bound mode {self.bound_mode} needs an even number of observables")
        if self.theta_grid < 1 or self.workers < 1:
            raise SpecError("theta_grid and workers must be positive")
        return self

    @property
    def controls(self) -> tuple[str, ...]:
        return self.o if self.o is not None else self.q

    def header_dict(self) -> dict:
        """Everything that determines the table contents (no output path, no worker count)."""
        d = asdict(self)
        d.pop("output_path")
        d.pop("workers")
        d["o"] = list(self.controls)
        return d


@dataclass(frozen=True)
class SweepRow:
    j: float
    d: float
    t: float
    concurrence: float
    gamma: float
    l_value: float
    w_value: float
    u_value: float | None
    utra: float
    purity_marginal: float

    @property
    def valid(self) -> bool:
        return self.w_value >= self.l_value - VALID_TOL

    @property
    def slack(self) -> float:
        return self.w_value - self.l_value


ROW_COLUMNS = ("j", "d", "t", "concurrence", "gamma", "l_value", "w_value", "u_value", "utra", "purity_marginal", "valid")


def evaluate_point(j: float, d: float, t: float, spec: SweepSpec) -> SweepRow:
    rho = thermal_state(DMParams(j, d, t))
    qs = [observable_from_token(tok) for tok in spec.q]
    pairs = []
    for q, tok in zip(qs, spec.controls):
        pairs.append((q, optimal_control(rho, q) if tok == "optimal" else observable_from_token(tok)))
    rep = conditional_reverse_report(rho, pairs, spec.bound_mode, m_mode=spec.m_mode, theta_grid=spec.theta_grid)
    return SweepRow(
        j=float(j),
        d=float(d),
        t=float(t),
        concurrence=concurrence_wootters(rho),
        gamma=mixedness(rho).gamma,
        l_value=rep.lhs,
        w_value=rep.bound,
        u_value=rep.details["u"],
        utra=rep.details["u_tra"],
        purity_marginal=rep.details["purity_marginal"],
    )


def _point_task(args):
    j, d, t, spec = args
    return evaluate_point(j, d, t, spec)


def grid_points(spec: SweepSpec) -> list[tuple[float, float, float]]:
    return [
        (float(j), float(d), float(t))
        for j in range_values(spec.j_values)
        for d in range_values(spec.d_values)
        for t in range_values(spec.t_values)
    ]


def compute_rows(spec: SweepSpec, points: Sequence[tuple[float, float, float]] | None = None) -> list[SweepRow]:
    """Evaluate grid points, in parallel when ``spec.workers > 1``; row order is the input order."""
    spec.validate()
    points = grid_points(spec) if points is None else list(points)
    tasks = [(j, d, t, spec) for j, d, t in points]
    if spec.workers == 1 or len(tasks) < 2:
        return [_point_task(a) for a in tasks]
    chunk = max(1, len(tasks) // (4 * spec.workers))
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        return list(pool.map(_point_task, tasks, chunksize=chunk))


def format_value(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def parse_value(text: str):
    if text == "NA":
        return None
    if text in ("true", "false"):
        return text == "true"
    return float(text)


def write_table(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    header: dict,
    diagnostics: dict | None = None,
) -> Path:
    path = Path(path)
    lines = [f"# revunc {__version__}", "# spec " + json.dumps(header, sort_keys=True)]
    for k, v in (diagnostics or {}).items():
        lines.append(f"# diagnostic {k}={format_value(v)}")
    lines.append(",".join(columns))
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_table(path: str | Path) -> tuple[dict, list[str], list[list]]:
    """Parse a table file into ``(meta, columns, rows)``."""
    meta: dict = {"diagnostics": {}}
    columns: list[str] = []
    rows: list[list] = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if line.startswith("# spec "):
            meta["spec"] = json.loads(line[7:])
        elif line.startswith("# diagnostic "):
            k, v = line[13:].split("=", 1)
            meta["diagnostics"][k] = parse_value(v)
        elif line.startswith("#"):
            meta.setdefault("comments", []).append(line[1:].strip())
        elif not columns:
            columns = line.split(",")
        else:
            rows.append([parse_value(x) for x in line.split(",")])
    return meta, columns, rows


def row_values(row: SweepRow) -> list:
    return [getattr(row, c) for c in ROW_COLUMNS]


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Evaluate the full (j, d, t) grid in lexicographic order and write the table.

    Raises CertificationError (after writing a counterexample file next to the
    output, if any) when a row has ``W < L - 1e-9``.
    """
    spec.validate()
    rows = compute_rows(spec)
    bad = [r for r in rows if not r.valid]
    if bad:
        cex = {"spec": spec.header_dict(), "rows": [asdict(r) for r in bad]}
        if spec.output_path:
            Path(str(spec.output_path) + ".counterexample.json").write_text(json.dumps(cex, indent=2, sort_keys=True))
        raise CertificationError(f"{len(bad)} grid point(s) violate W >= L", cex)
    if spec.output_path:
        slacks = [r.slack for r in rows]
        write_table(
            spec.output_path,
            ROW_COLUMNS,
            (row_values(r) for r in rows),
            spec.header_dict(),
            {"min_slack": min(slacks), "max_slack": max(slacks)},
        )
    return rows


def collapse_spread(gamma, values, bins: int = 40, noise_floor: float = 1e-6) -> float:
    """Largest within-bin spread of ``values`` after binning by ``gamma``, relative to the value range.

    Points with undefined values (None or NaN) are dropped.  A value range at or
    below ``noise_floor`` counts as constant and scores 0.
    """
    g = np.asarray(gamma, dtype=float)
    v = np.asarray([np.nan if x is None else x for x in values], dtype=float)
    keep = np.isfinite(v)
    g, v = g[keep], v[keep]
    if len(v) == 0:
        return float("nan")
    span = float(v.max() - v.min())
    if span <= noise_floor:
        return 0.0
    edges = np.linspace(g.min(), g.max(), bins + 1)
    idx = np.clip(np.searchsorted(edges, g, side="right") - 1, 0, bins - 1)
    worst = 0.0
    for b in np.unique(idx):
        sel = v[idx == b]
        worst = max(worst, float(sel.max() - sel.min()))
    return worst / span


# Figure tables.  Axis ranges the text does not state are artifact defaults.
DEFAULT_J: Range = (-2.0, 2.0, 41)
DEFAULT_D: Range = (0.0, 3.0, 31)
DEFAULT_T_LINE: Range = (0.2, 5.0, 50)
DEFAULT_FIG7_T = 1.0


@dataclass(frozen=True)
class Panel:
    name: str
    spec: SweepSpec
    columns: tuple[str, ...]
    kind: str = "plain"  # plain | collapse_w | collapse_u | u_diag


_COLUMN_SOURCES = {
    "j": "j", "d": "d", "t": "t", "c": "concurrence", "gamma": "gamma",
    "l": "l_value", "w": "w_value", "u": "u_value",
}


def _figure_panels(figure_id: int, overrides: dict) -> list[Panel]:
    base = SweepSpec(**{k: v for k, v in overrides.items() if k in SweepSpec.__dataclass_fields__ and k != "bound_mode"})
    modes = [overrides["bound_mode"]] if overrides.get("bound_mode") else ["eq10", "eq9"]
    has = overrides.__contains__

    def fix(spec, **kw):
        return replace(spec, **{k: v for k, v in kw.items() if not has(k)})

    def line(spec):
        return fix(spec, j_values=(1.0, 1.0, 1), d_values=(1.0, 1.0, 1), t_values=DEFAULT_T_LINE)

    panels: list[Panel] = []
    if figure_id == 2:
        temps = [overrides["t_values"]] if has("t_values") else [(0.5, 0.5, 1), (1.0, 1.0, 1)]
        for tv in temps:
            spec = fix(base, j_values=DEFAULT_J, d_values=DEFAULT_D)
            spec = replace(spec, t_values=tv)
            panels.append(Panel(f"T{format_value(tv[0])}", spec, ("j", "d", "t", "c", "gamma")))
        return panels
    if figure_id not in range(3, 10):
        raise SpecError(f"unknown figure id {figure_id!r}")
    for mode in modes:
        b = replace(base, bound_mode=mode)
        if figure_id == 3:
            panels.append(Panel(mode, line(b), ("t", "l", "w")))
        elif figure_id == 5:
            panels.append(Panel(mode, line(b), ("t", "w", "c", "gamma")))
        elif figure_id == 8:
            panels.append(Panel(mode, line(b), ("t", "u", "c", "gamma")))
        elif figure_id == 4:
            temps = [overrides["t_values"]] if has("t_values") else [(0.5, 0.5, 1), (1.0, 1.0, 1)]
            for tv in temps:
                spec = replace(fix(b, j_values=DEFAULT_J, d_values=DEFAULT_D), t_values=tv)
                panels.append(Panel(f"T{format_value(tv[0])}_{mode}", spec, ("j", "d", "t", "w")))
        elif figure_id == 7:
            spec = fix(b, j_values=DEFAULT_J, d_values=DEFAULT_D, t_values=(DEFAULT_FIG7_T, DEFAULT_FIG7_T, 1))
            panels.append(Panel(mode, spec, ("j", "d", "t", "u"), "u_diag"))
        elif figure_id in (6, 9):
            js = [overrides["j_values"]] if has("j_values") else [(1.0, 1.0, 1), (-1.0, -1.0, 1)]
            col, kind = ("w", "collapse_w") if figure_id == 6 else ("u", "collapse_u")
            for jv in js:
                spec = replace(fix(b, d_values=DEFAULT_D, t_values=DEFAULT_T_LINE), j_values=jv)
                panels.append(Panel(f"J{format_value(jv[0])}_{mode}", spec, ("d", "t", "gamma", col), kind))
    return panels


def panel_diagnostics(panel: Panel, rows: Sequence[SweepRow]) -> dict:
    if panel.kind == "collapse_w":
        return {"collapse_spread_w": collapse_spread([r.gamma for r in rows], [r.w_value for r in rows])}
    if panel.kind == "collapse_u":
        return {"collapse_spread_u": collapse_spread([r.gamma for r in rows], [r.u_value for r in rows])}
    if panel.kind == "u_diag":
        us = [r.u_value for r in rows if r.u_value is not None]
        return {"max_abs_u_minus_1": max((abs(u - 1.0) for u in us), default=math.nan)}
    return {}


@dataclass
class FigureResult:
    paths: list[Path] = field(default_factory=list)
    diagnostics: dict[str, dict] = field(default_factory=dict)
    rows: dict[str, list[SweepRow]] = field(default_factory=dict)


def emit_figure_data(figure_id: int, overrides: dict | None = None, out_dir: str | Path = ".") -> FigureResult:
    """Write one table per panel of figure ``figure_id`` into ``out_dir``.

    ``overrides`` holds SweepSpec fields.  Without a ``bound_mode`` override,
    figures 3-9 get an ``eq10`` and an ``eq9`` variant of every panel.
    """
    overrides = dict(overrides or {})
    try:
        figure_id = int(figure_id)
    except (TypeError, ValueError):
        raise SpecError(f"unknown figure id {figure_id!r}") from None
    if figure_id not in range(2, 10):
        raise SpecError(f"unknown figure id {figure_id!r}")
    result = FigureResult()
    for panel in _figure_panels(figure_id, overrides):
        rows = compute_rows(panel.spec)
        bad = [r for r in rows if not r.valid]
        if bad:
            raise CertificationError(
                f"figure {figure_id} panel {panel.name}: {len(bad)} row(s) violate W >= L",
                {"spec": panel.spec.header_dict(), "rows": [asdict(r) for r in bad]},
            )
        diag = panel_diagnostics(panel, rows)
        header = {"figure": figure_id, "panel": panel.name, **panel.spec.header_dict()}
        table = ([getattr(r, _COLUMN_SOURCES[c]) for c in panel.columns] for r in rows)
        path = write_table(Path(out_dir) / f"fig{figure_id}_{panel.name}.csv", panel.columns, table, header, diag)
        result.paths.append(path)
        result.diagnostics[panel.name] = diag
        result.rows[panel.name] = rows
    return result
