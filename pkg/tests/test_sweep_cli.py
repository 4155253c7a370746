import json

import numpy as np
import pytest

import revunc.sweep as sweep_mod
from revunc import audit as audit_mod
from revunc.cli import main
from revunc.sweep import (
    CertificationError, SpecError, SweepSpec, collapse_spread, emit_figure_data, format_value,
    parse_observables, parse_range, read_table, run_sweep,
)


def test_parse_range():
    assert parse_range("0:3:13") == (0.0, 3.0, 13)
    assert parse_range("-2:2:9") == (-2.0, 2.0, 9)
    assert parse_range("0.5") == (0.5, 0.5, 1)
    for bad in ("a:b:c", "1:2", ""):
        with pytest.raises(SpecError):
            parse_range(bad)


def test_parse_observables():
    assert parse_observables("sx, sz") == ("sx", "sz")
    assert parse_observables("1.5707963267948966:0,sz") == ("1.5707963267948966:0", "sz")
    with pytest.raises(SpecError):
        parse_observables("sq")


def test_spec_validation():
    with pytest.raises(SpecError):
        SweepSpec(t_values=(0.0, 1.0, 3)).validate()
    with pytest.raises(SpecError):
        SweepSpec(j_values=(0.0, 1.0, 0)).validate()
    with pytest.raises(SpecError):
        SweepSpec(q=("sx",), bound_mode="eq9").validate()
    with pytest.raises(SpecError):
        SweepSpec(q=("sx", "sz"), o=("sx",)).validate()


def test_format_value_roundtrip():
    for v in (0.1, 1 / 3, -2.5e-300, 12345.678901234567):
        assert float(format_value(v)) == v
    assert format_value(None) == "NA" and format_value(True) == "true"


def test_sweep_cardinality_order_and_roundtrip(tmp_path):
    spec = SweepSpec(j_values=(-1, 1, 2), d_values=(0, 1, 2), t_values=(0.5, 1, 2),
                     bound_mode="eq9", output_path=str(tmp_path / "s.csv"))
    rows = run_sweep(spec)
    assert len(rows) == 8
    keys = [(r.j, r.d, r.t) for r in rows]
    assert keys == sorted(keys)
    meta, cols, table = read_table(tmp_path / "s.csv")
    assert cols[:3] == ["j", "d", "t"] and len(table) == 8
    assert meta["spec"]["bound_mode"] == "eq9"
    assert table[3][cols.index("w_value")] == rows[3].w_value
    assert all(r[cols.index("valid")] is True for r in table)


def test_sweep_deterministic_across_workers(tmp_path):
    base = dict(j_values=(-2, 2, 3), d_values=(0, 3, 3), t_values=(0.5, 2, 2), bound_mode="eq10")
    run_sweep(SweepSpec(**base, output_path=str(tmp_path / "a.csv")))
    run_sweep(SweepSpec(**base, output_path=str(tmp_path / "b.csv"), workers=3))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sweep_u_na_when_l_vanishes(tmp_path):
    # J = 1, D = 0, very low T: the singlet has perfectly correlated sx and sz, so L -> 0
    rows = run_sweep(SweepSpec(j_values=(1, 1, 1), d_values=(0, 0, 1), t_values=(0.01, 0.01, 1),
                               bound_mode="eq9", output_path=str(tmp_path / "u.csv")))
    assert rows[0].u_value is None
    assert ",NA," in (tmp_path / "u.csv").read_text()


def test_sweep_violation_dumps_counterexample(tmp_path, monkeypatch):
    real = sweep_mod.evaluate_point

    def broken(j, d, t, spec):
        row = real(j, d, t, spec)
        return sweep_mod.replace(row, w_value=row.l_value - 1.0)

    monkeypatch.setattr(sweep_mod, "evaluate_point", broken)
    out = tmp_path / "bad.csv"
    with pytest.raises(CertificationError):
        run_sweep(SweepSpec(output_path=str(out)))
    assert json.loads((tmp_path / "bad.csv.counterexample.json").read_text())["rows"]


def test_optimal_control_token(tmp_path):
    rows = run_sweep(SweepSpec(o=("optimal", "optimal"), d_values=(0, 2, 3)))
    plain = run_sweep(SweepSpec(d_values=(0, 2, 3)))
    for a, b in zip(rows, plain):
        assert a.w_value <= b.w_value + 1e-9 and a.valid


def test_collapse_spread():
    g = np.linspace(0, 1, 400)
    assert collapse_spread(g, g**2) < 0.06
    assert collapse_spread(g, np.where(np.arange(400) % 2, 1.0, 0.0)) == 1.0
    assert collapse_spread(g, np.ones(400)) == 0.0
    assert collapse_spread(g, [None] * 399 + [1.0]) == 0.0


def test_figure_5_single_file(tmp_path):
    res = emit_figure_data(5, {"bound_mode": "eq10"}, tmp_path)
    assert len(res.paths) == 1
    _, cols, rows = read_table(res.paths[0])
    assert cols == ["t", "w", "c", "gamma"]
    c = np.array([r[2] for r in rows])
    assert np.all(np.diff(c) <= 1e-12)


def test_figure_panels(tmp_path):
    res = emit_figure_data(2, {"j_values": (-2, 2, 5), "d_values": (0, 3, 4)}, tmp_path)
    assert [p.name for p in res.paths] == ["fig2_T0.5.csv", "fig2_T1.csv"]
    res = emit_figure_data(6, {"d_values": (0, 3, 4), "t_values": (0.2, 5, 6)}, tmp_path)
    assert len(res.paths) == 4
    assert "collapse_spread_w" in res.diagnostics["J1_eq10"]
    meta, cols, _ = read_table(res.paths[0])
    assert cols == ["d", "t", "gamma", "w"] and "collapse_spread_w" in meta["diagnostics"]
    res = emit_figure_data(7, {"bound_mode": "eq10", "j_values": (-2, 2, 5), "d_values": (0, 3, 4)}, tmp_path)
    assert res.diagnostics["eq10"]["max_abs_u_minus_1"] < 1e-9
    with pytest.raises(SpecError):
        emit_figure_data(11)


def test_cli_sweep_and_state(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--j", "-1:1:2", "--d", "0:1:2", "--t", "0.5:1:2", "--bound", "eq8", "--out", str(out)]) == 0
    assert len(read_table(out)[2]) == 8
    assert "slack min" in capsys.readouterr().out
    assert main(["state", "--j", "1", "--d", "1", "--t", "1", "--out", str(tmp_path / "st.json")]) == 0
    info = json.loads((tmp_path / "st.json").read_text())
    assert info["closed_form_max_deviation"]["corrected"] < 1e-12
    assert info["partition_function"] == pytest.approx(info["partition_function_closed"])


def test_cli_figure(tmp_path, capsys):
    assert main(["figure", "--fig", "3", "--t", "0.5:2:4", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["fig3_eq10.csv", "fig3_eq9.csv"]


def test_cli_exit_codes(tmp_path, monkeypatch):
    assert main(["audit", "--trials", "0"]) == 1
    with pytest.raises(SystemExit) as err:
        main(["sweep", "--bogus"])
    assert err.value.code == 1
    assert main(["sweep", "--t", "0:1:3", "--out", str(tmp_path / "x.csv")]) == 1
    assert main(["state", "--t", "-1"]) == 1
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["sweep", "--out", str(blocker / "sub" / "x.csv")]) == 3

    real = audit_mod.run_audit

    def failing(*a, **k):
        rep = real(*a, **k)
        rep.get("total_variance").failures.append({"value": 1.0})
        return rep

    monkeypatch.setattr("revunc.cli.run_audit", failing)
    assert main(["audit", "--trials", "2"]) == 2


def test_cli_audit_output(tmp_path):
    out = tmp_path / "audit.json"
    assert main(["audit", "--trials", "6", "--dims", "2x2,2x3", "--experimental", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["ok"] is True
    assert [p["name"] for p in report["non_certified"]] == ["multi_experimental_m"]
