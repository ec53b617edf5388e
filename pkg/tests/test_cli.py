import json
import math

import pytest

from ipdt.cli import OUT_DIR_ENV, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_tune_db_deg_inputs(capsys):
    code, out, _ = run(capsys, "tune", "--am-db", "6.0206", "--pm-deg", "180", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["kc"] == pytest.approx(1.532, abs=5e-4)
    assert data["td"] == pytest.approx(1.034, abs=5e-4)
    assert data["phi_m"] == pytest.approx(math.pi)


def test_tune_matches_ratio_inputs(capsys):
    _, a, _ = run(capsys, "tune", "--am", "2", "--format", "json")
    _, b, _ = run(capsys, "tune", "--am-db", str(20 * math.log10(2)), "--format", "json")
    assert json.loads(a)["kc"] == pytest.approx(json.loads(b)["kc"], rel=1e-12)


def test_tune_sign_flip_warns(capsys):
    code, out, err = run(capsys, "tune", "--pm", "1.0", "--ts", "40", "--format", "json")
    assert code == 0
    if json.loads(out)["td_sign_flipped"]:
        assert "warning" in err


@pytest.mark.parametrize("argv", [
    ["tune", "--ts", "0"],
    ["tune", "--am", "2", "--am-db", "6"],
    ["simulate", "--scenario", "no_such_scenario"],
    ["compare", "--methods", "ali_majhi,bogus"],
    ["margins"],
    ["frobnicate"],
])
def test_invalid_input_exits_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err.startswith("error:")


def test_degenerate_spec_exits_2(capsys):
    # w_gc * d = pi puts the derivative-time tangent on a pole
    code, _, err = run(capsys, "tune", "--d", "10", "--ts", "40")
    assert code == 2
    assert "pole" in err


def test_compare_csv_rows_and_bytes(capsys):
    code, first, _ = run(capsys, "compare", "--format", "csv")
    assert code == 0
    lines = first.strip().splitlines()
    assert len(lines) == 5
    assert [ln.split(",")[0] for ln in lines[1:]] == [
        "wang_cluett", "sree_chidambaram", "ali_majhi", "proposed_pd"]
    _, second, _ = run(capsys, "compare", "--format", "csv")
    assert first == second


def test_compare_export_traces(capsys, tmp_path):
    code, _, _ = run(capsys, "compare", "--scenario", "regulatory", "--methods", "ali_majhi",
                     "--export-traces", "--out-dir", str(tmp_path), "--format", "json")
    assert code == 0
    assert (tmp_path / "regulatory_ali_majhi.csv").read_text().startswith("t,sp,y,u,d,d_hat\n")


def test_margins_json(capsys):
    code, out, _ = run(capsys, "margins", "--method", "proposed_pd", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["am"] == pytest.approx(3.854, abs=1e-3)
    # the published gains are rounded, so w_pc only lands near pi/10
    assert data["w_pc"] == pytest.approx(math.pi / 10, rel=1e-4)


def test_margins_explicit_gains(capsys):
    code, out, _ = run(capsys, "margins", "--kc", "1", "--format", "json")
    assert code == 0
    # proportional only: phase crossover at w*d = pi/2
    assert json.loads(out)["w_pc"] == pytest.approx(math.pi / 12, rel=1e-8)


def test_simulate_writes_files(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--out-dir", str(tmp_path), "--horizon", "50")
    assert code == 0
    trace = tmp_path / "step_tracking_proposed_pd.csv"
    assert len(trace.read_text().splitlines()) == 5002  # header plus samples at t = 0, 0.01, ..., 50
    metrics = json.loads((tmp_path / "step_tracking_proposed_pd_metrics.json").read_text())
    assert metrics["method"] == "proposed_pd"


def test_out_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env_out"))
    code, _, _ = run(capsys, "simulate", "--method", "ali_majhi", "--horizon", "20")
    assert code == 0
    assert (tmp_path / "env_out" / "step_tracking_ali_majhi.csv").exists()


def test_sweep_outputs(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep", "--scenario", "sweep_ts", "--out-dir", str(tmp_path),
                     "--plot-script", "--format", "json")
    assert code == 0
    for v in (40, 50, 60, 70):
        assert (tmp_path / f"sweep_ts_{v}.csv").exists()
    header = (tmp_path / "sweep_ts_plot_data.csv").read_text().splitlines()[0]
    assert header == "t,ts=40,ts=50,ts=60,ts=70"
    assert (tmp_path / "plot_sweep_ts.py").exists()
    summary = json.loads((tmp_path / "sweep_ts_summary.json").read_text())
    assert summary["settling_increasing"] is True


def test_scenario_file_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "scenario", "regulatory")
    assert code == 0
    path = tmp_path / "reg.json"
    path.write_text(out)
    code, out2, _ = run(capsys, "scenario", str(path))
    assert out2 == out


def test_unwritable_out_dir_exits_1(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run(capsys, "simulate", "--out-dir", str(blocker / "sub"))
    assert code == 1
