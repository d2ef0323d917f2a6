import pytest

from fluxlev import cli
from fluxlev import magnetics as mg
from fluxlev import verify


def read_summary(path):
    out = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(" = ")
        out[key] = value
    return out


def test_run_discharge(tmp_path, capsys):
    rc = cli.main(["run", "S5_discharge", "--set", "sim.t_end=900",
                   "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "S5_discharge.csv").exists()
    assert (tmp_path / "S5_discharge.svg").exists()
    summary = read_summary(tmp_path / "S5_discharge.summary.txt")
    assert float(summary["tau_fit_s"]) == pytest.approx(860.0, rel=5e-3)


def test_run_discharge_with_joint_resistance(tmp_path):
    rc = cli.main(["run", "S5_discharge", "--set", "circuit.R=1.7e-6",
                   "--set", "sim.t_end=900", "--out", str(tmp_path)])
    assert rc == 0
    summary = read_summary(tmp_path / "S5_discharge.summary.txt")
    assert float(summary["tau_fit_s"]) == pytest.approx(1.35e-3 / 1.7e-6, rel=5e-3)


def test_run_zfc_pump_flag(tmp_path):
    rc = cli.main(["run", "S4_zfc", "--pump", "off", "--out", str(tmp_path)])
    assert rc == 0
    summary = read_summary(tmp_path / "S4_zfc.summary.txt")
    assert summary["lifted"] == "false"
    assert summary["stable_equilibrium_found"] == "false"

    rc = cli.main(["run", "S4_zfc", "--pump", "null", "--out", str(tmp_path)])
    assert rc == 0
    summary = read_summary(tmp_path / "S4_zfc.summary.txt")
    assert summary["lifted"] == "true"
    assert 0.017 <= float(summary["equilibrium_gap_m"]) <= 0.023


def test_run_rejects_bad_override(tmp_path, capsys):
    rc = cli.main(["run", "S5_discharge", "--set", "nope=1", "--out", str(tmp_path)])
    assert rc == 2
    assert "unknown config key" in capsys.readouterr().err


def test_run_custom_requires_schedule(tmp_path, capsys):
    rc = cli.main(["run", "custom", "--out", str(tmp_path)])
    assert rc == 2
    assert "table.schedule" in capsys.readouterr().err


def test_run_custom_scenario(tmp_path):
    rc = cli.main(["run", "custom",
                   "--set", "table.schedule=0:0.2",
                   "--set", "scenario.i_start=5", "--set", "sim.t_end=30",
                   "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "custom.csv").exists()


def test_readme_custom_example(tmp_path):
    # the approach schedule quoted in the README runs as written
    rc = cli.main(["run", "custom",
                   "--set", "table.schedule=0:0.10, 20:0.10, 192:0.014",
                   "--set", "sim.t_end=250", "--out", str(tmp_path)])
    assert rc == 0
    summary = read_summary(tmp_path / "custom.summary.txt")
    assert summary["scenario"] == "custom"


def test_verify_passes(capsys):
    assert cli.main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "oracle suite: PASS" in out
    assert out.count("PASS") >= 5


def test_verify_negative_control(monkeypatch, system):
    # a slightly wrong elliptic integral must trip the Neumann oracle
    true_ke = mg.elliptic_ke

    def bent_ke(m):
        K, E = true_ke(m)
        return K * (1.0 + 1e-6), E

    monkeypatch.setattr(mg, "elliptic_ke", bent_ke)
    result = verify.check_mutual_vs_neumann(n_pairs=10)
    assert result.status == "fail"


def test_verify_skips_tau_at_zero_resistance(system):
    import dataclasses
    from fluxlev import circuit as ci
    ideal = dataclasses.replace(system, circuit=ci.CircuitParams(R_loop=0.0))
    result = verify.check_discharge_tau(ideal)
    assert result.status == "skip"
    assert result.passed  # a skip does not fail the suite


def test_calibrate_report_and_file(tmp_path, capsys):
    rc = cli.main(["calibrate", "--out", str(tmp_path / "cal.txt")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "0.313700 T" in out
    assert "794.1 s" in out
    assert "4.4145 N" in out
    text = (tmp_path / "cal.txt").read_text()
    assert text.startswith("magnet.sheet_current = ")
    # the calibration file round-trips through the run path
    rc = cli.main(["run", "S5_discharge", "--calibration", str(tmp_path / "cal.txt"),
                   "--set", "sim.t_end=100", "--out", str(tmp_path)])
    assert rc == 0


def test_dump_coupling(tmp_path):
    rc = cli.main(["dump-coupling", "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "coupling.csv").read_text().splitlines()
    assert lines[0] == "z[m],M[H],dMdz[H/m]"
    assert len(lines) > 400


def test_sweep(tmp_path, capsys):
    rc = cli.main(["sweep", "S5_discharge",
                   "--grid", "circuit.R=1.5697674418604652e-06,1.7e-06",
                   "--set", "sim.t_end=400", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "S5_discharge_g0.summary.txt").exists()
    assert (tmp_path / "S5_discharge_g1.summary.txt").exists()
    s0 = read_summary(tmp_path / "S5_discharge_g0.summary.txt")
    s1 = read_summary(tmp_path / "S5_discharge_g1.summary.txt")
    assert float(s0["tau_fit_s"]) > float(s1["tau_fit_s"])


def test_sweep_parallel_workers(tmp_path):
    rc = cli.main(["sweep", "S5_discharge", "--workers", "2",
                   "--grid", "scenario.i_start=5,10",
                   "--set", "sim.t_end=200", "--out", str(tmp_path)])
    assert rc == 0
    s0 = read_summary(tmp_path / "S5_discharge_g0.summary.txt")
    s1 = read_summary(tmp_path / "S5_discharge_g1.summary.txt")
    assert {float(s0["i_start_A"]), float(s1["i_start_A"])} == {5.0, 10.0}


def test_list_keys(capsys):
    assert cli.main(["--list-keys"]) == 0
    out = capsys.readouterr().out
    assert "circuit.L" in out and "pump.r" in out and "table.schedule" in out
