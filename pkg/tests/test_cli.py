import json

import numpy as np
import pytest

import entdyn.harness
from entdyn.cli import main
from entdyn.harness import NumericalError


def test_sweep_to_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(
        [
            "sweep",
            "--family", "two-field",
            "--mode", "one_sided",
            "--initial", "bell:phi+",
            "--p-grid", "0,0.25,0.5",
            "--pipeline", "analytic",
            "--out", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "p,concurrence,error,predicted"
    assert lines[1].startswith("0.0,1.0,")


def test_sweep_stdout_json(capsys):
    code = main(
        [
            "sweep",
            "--family", "isotropic",
            "--p-grid", "0:1:3",
            "--pipeline", "exact",
            "--format", "json",
        ]
    )
    assert code == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["p"] for r in rows] == [0.0, 0.5, 1.0]
    assert rows[0]["concurrence"] == pytest.approx(1.0)


def test_config_file_with_flag_override(tmp_path):
    config = {
        "family": "two-field",
        "mode": "one_sided",
        "p_grid": [0.0, 0.25],
        "pipeline": "analytic",
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    out = tmp_path / "rows.json"
    # flag overrides the config's family
    code = main(
        ["sweep", "--config", str(cfg_path), "--family", "isotropic",
         "--format", "json", "--out", str(out)]
    )
    assert code == 0
    rows = json.loads(out.read_text())
    # isotropic and two-field coincide on a Bell pair one-sided; check grid came from file
    assert [r["p"] for r in rows] == [0.0, 0.25]


def test_bad_config_exit_code(tmp_path):
    assert main(["sweep", "--p-grid", "0.9,0.1"]) == 1
    assert main(["sweep", "--initial", "werner:0.3"]) == 1
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert main(["sweep", "--config", str(cfg)]) == 1


def test_unwritable_out_exit_code(tmp_path):
    out = tmp_path / "no_such_dir"
    out.write_text("block")  # a file where a directory is needed
    code = main(
        ["sweep", "--p-grid", "0,0.5", "--pipeline", "analytic",
         "--out", str(out / "rows.csv")]
    )
    assert code == 3


def test_numerical_error_exit_code(monkeypatch):
    def boom():
        raise NumericalError("did not converge")

    monkeypatch.setattr(entdyn.harness, "run_breaking_points", boom)
    monkeypatch.setattr("entdyn.cli.run_breaking_points", boom)
    assert main(["breaking-points"]) == 2


def test_breaking_points_stdout(capsys):
    assert main(["breaking-points", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    table = {(r["family"], r["mode"]): r["p_star"] for r in rows}
    assert table[("two-field", "two_sided")] == pytest.approx(1 / 3, abs=1e-6)


def test_pes_sweep_writes_per_initial_files(tmp_path):
    out = tmp_path / "pes.csv"
    code = main(
        [
            "pes-sweep",
            "--family", "isotropic",
            "--initial", "pes:0.1309",
            "--initial", "mixed:0.3927:0.25",
            "--p-grid", "0,0.2,0.4",
            "--pipeline", "analytic",
            "--out", str(out),
        ]
    )
    assert code == 0
    written = sorted(p.name for p in tmp_path.glob("pes_*.csv"))
    assert len(written) == 2
    assert any("mixed" in name for name in written)


def test_pes_sweep_json_keyed_by_label(capsys):
    code = main(
        ["pes-sweep", "--family", "isotropic", "--initial", "pes:0.1309",
         "--p-grid", "0,0.5", "--pipeline", "analytic", "--format", "json"]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload) == 1
    label, rows = next(iter(payload.items()))
    assert label.startswith("pure_pes")
    assert len(rows) == 2


def test_characterize(tmp_path):
    out = tmp_path / "chars.csv"
    code = main(
        ["characterize", "--family", "two-field", "--p-grid", "0,0.4", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("p,chi_0")
    cells = lines[2].split(",")
    assert float(cells[1]) == pytest.approx(0.6, abs=1e-10)


def test_ellipsoid_csv_and_json(tmp_path, capsys):
    code = main(["ellipsoid", "--family", "two-field", "--p", "0.5",
                 "--n-theta", "3", "--n-phi", "4"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,y,z"
    assert len(lines) == 13
    code = main(["ellipsoid", "--family", "isotropic", "--p", "0.75",
                 "--n-theta", "3", "--n-phi", "4", "--format", "json"])
    assert code == 0
    points = json.loads(capsys.readouterr().out)
    assert np.max(np.abs(np.asarray(points))) < 1e-12  # fully depolarizing


def test_ellipsoid_from_channel_file(tmp_path, capsys):
    channel_path = tmp_path / "channel.json"
    channel_path.write_text(json.dumps({"family": "pauli", "chi": [0.7, 0.1, 0.1, 0.1]}))
    code = main(["ellipsoid", "--channel", str(channel_path), "--n-theta", "3", "--n-phi", "4",
                 "--format", "json"])
    assert code == 0
    points = np.asarray(json.loads(capsys.readouterr().out))
    # isotropic-like channel: all radii 1 - 4*0.3/3 ... here chi -> radii (0.6, 0.6, 0.6)
    assert np.allclose(np.linalg.norm(points, axis=1), 0.6, atol=1e-12)


def test_ellipsoid_requires_p_or_channel():
    assert main(["ellipsoid", "--family", "isotropic"]) == 1


def test_tomo_sim_summary_and_counts_round_trip(tmp_path):
    summary_path = tmp_path / "summary.json"
    counts_path = tmp_path / "counts.csv"
    code = main(
        [
            "tomo-sim",
            "--family", "isotropic",
            "--mode", "one_sided",
            "--p", "0.2",
            "--initial", "bell:phi+",
            "--counts", "400",
            "--trials", "2",
            "--seed", "7",
            "--counts-out", str(counts_path),
            "--out", str(summary_path),
        ]
    )
    assert code == 0
    summary = json.loads(summary_path.read_text())
    assert summary["predicted"] == pytest.approx(0.6)
    assert abs(summary["concurrence"] - 0.6) < 0.15
    assert summary["rho"]["dim"] == 4
    assert counts_path.exists()

    # reconstruct from the written counts file
    summary2_path = tmp_path / "summary2.json"
    code = main(
        ["tomo-sim", "--family", "isotropic", "--p", "0.2", "--trials", "2",
         "--counts-in", str(counts_path), "--out", str(summary2_path)]
    )
    assert code == 0
    summary2 = json.loads(summary2_path.read_text())
    assert summary2["concurrence"] == pytest.approx(summary["concurrence"], abs=1e-9)


def test_outdir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("ENTDYN_OUTDIR", str(tmp_path))
    code = main(["sweep", "--p-grid", "0,0.5", "--pipeline", "analytic",
                 "--out", "rows.csv"])
    assert code == 0
    assert (tmp_path / "rows.csv").exists()


def test_selftest_exit_code():
    assert main(["selftest"]) == 0


def test_help_exit_code():
    assert main(["--help"]) == 0
    assert main([]) == 1  # missing sub-command counts as bad usage
