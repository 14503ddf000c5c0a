import json

import numpy as np
import pytest
from click.testing import CliRunner

from phonongate import cli, runner
from phonongate.fidelity import InitialStateFamily
from phonongate.hamiltonians import PhysicalParams
from phonongate.runner import (
    PAPER_V1,
    ScenarioConfig,
    envelope_maxima,
    figure_config,
    refine_peak,
    run_scenario,
    run_sweep,
)


def small_master_mapping(**overrides):
    doc = {
        "params": dict(PAPER_V1),
        "dims": {"n_cav": 2, "n_b": 2},
        "initial": {"kind": "fixed-list", "labels": ["00", "01", "11"], "cavity_fock": 1},
        "t_max_us": 1.0,
        "n_steps": 2001,
        "mode": "master",
        "quadrature_convention": "bare",
        "fidelity_convention": "amplitude",
        "label": "small",
    }
    doc.update(overrides)
    return doc


def test_config_roundtrip():
    cfg = ScenarioConfig.from_mapping(small_master_mapping())
    again = ScenarioConfig.from_mapping(cfg.to_mapping())
    assert again.params.Delta == pytest.approx(cfg.params.Delta)
    assert again.n_steps == cfg.n_steps
    assert [l for l, _ in again.initial.members] == ["00", "01", "11"]


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig.from_mapping(small_master_mapping(mode="magic"))
    with pytest.raises(ValueError):
        ScenarioConfig.from_mapping(small_master_mapping(dims={"n_cav": 1, "n_b": 2}))
    with pytest.raises(ValueError):
        ScenarioConfig.from_mapping(small_master_mapping(n_steps=1))
    with pytest.raises(ValueError):
        ScenarioConfig.from_mapping(small_master_mapping(unknown_key=1))
    with pytest.raises(ValueError):
        ScenarioConfig.from_mapping(small_master_mapping(initial={"kind": "bell"}))


def test_refine_peak_parabola():
    t = np.linspace(0.0, 1.0, 101)
    true_t, true_v = 0.344, 0.9
    series = true_v - 30.0 * (t - true_t) ** 2
    value, t_peak = refine_peak(t, series)
    assert value == pytest.approx(true_v, abs=1e-9)
    assert t_peak == pytest.approx(true_t, abs=1e-6)


def test_envelope_maxima_on_beat_pattern():
    t = np.linspace(0.0, 10e-6, 20001)
    series = np.abs(np.cos(2 * np.pi * 0.4e6 * t)) * (1 + 0.01 * np.sin(2 * np.pi * 30e6 * t))
    maxima = envelope_maxima(t, series, window_us=0.3)
    times = sorted(m["t_us"] for m in maxima)
    # lobes of |cos| repeat every 1.25 us
    assert any(abs(tt - 2.5) < 0.15 for tt in times)
    assert any(abs(tt - 5.0) < 0.15 for tt in times)


def test_analytic_run_peak_at_quarter_period(tmp_path):
    omega = 30.0463
    cfg = ScenarioConfig(
        params=PhysicalParams(),
        initial=InitialStateFamily.from_labels(["00", "01", "10", "11"]),
        mode="analytic",
        t_max_us=120e3,
        n_steps=4001,
        Omega=omega,
        outputs=("fidelity", "avg_entangled", "avg_separable"),
        label="analytic-test",
    )
    summary = run_scenario(cfg, tmp_path)
    assert summary["peak_fidelity"] == pytest.approx(1.0, abs=1e-6)
    assert summary["peak_time_s"] == pytest.approx(np.pi / (2 * omega), rel=1e-3)
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t_s,F_00,F_01,F_10,F_11,F_avg,F_avg_entangled,F_avg_separable"


def test_analytic_omega_from_params(tmp_path):
    cfg = ScenarioConfig(
        params=PhysicalParams.from_config(runner.PAPER_VA),
        initial=InitialStateFamily.from_labels(["00"]),
        mode="analytic",
        t_max_us=120e3,
        n_steps=101,
        X_G_sq=0.25,
        label="va",
    )
    summary = run_scenario(cfg, tmp_path)
    assert summary["integrator"]["Omega_rad_s"] == pytest.approx(30.0463, rel=1e-3)


def test_master_run_writes_outputs(tmp_path):
    cfg = ScenarioConfig.from_mapping(small_master_mapping())
    summary = run_scenario(cfg, tmp_path)
    assert (tmp_path / "trajectory.csv").exists()
    assert (tmp_path / "summary.json").exists()
    reloaded = json.loads((tmp_path / "summary.json").read_text())
    assert reloaded["peak_fidelity"] == pytest.approx(summary["peak_fidelity"])
    assert reloaded["main_column"] == "F_avg"
    assert 0.0 <= reloaded["peak_fidelity"] <= 1.0 + 1e-9
    assert reloaded["integrator"]["max_trace_drift"] <= 1e-6


def test_master_run_fidelity_convention_sqrt(tmp_path):
    sq = run_scenario(ScenarioConfig.from_mapping(
        small_master_mapping(fidelity_convention="squared", n_steps=501)), tmp_path / "a")
    amp = run_scenario(ScenarioConfig.from_mapping(
        small_master_mapping(fidelity_convention="amplitude", n_steps=501)), tmp_path / "b")
    f_sq = np.loadtxt(tmp_path / "a" / "trajectory.csv", delimiter=",", skiprows=1)[:, 1]
    f_amp = np.loadtxt(tmp_path / "b" / "trajectory.csv", delimiter=",", skiprows=1)[:, 1]
    assert np.allclose(np.sqrt(f_sq), f_amp, atol=1e-12)


@pytest.mark.parametrize("integrator", ["expm", "rk4"])
def test_master_run_deterministic(tmp_path, integrator):
    cfg = ScenarioConfig.from_mapping(
        small_master_mapping(n_steps=301, integrator=integrator))
    run_scenario(cfg, tmp_path / "r1")
    run_scenario(cfg, tmp_path / "r2")
    b1 = (tmp_path / "r1" / "trajectory.csv").read_bytes()
    b2 = (tmp_path / "r2" / "trajectory.csv").read_bytes()
    assert b1 == b2


def test_master_integrators_agree(tmp_path):
    base = small_master_mapping(n_steps=301, t_max_us=0.5)
    s_expm = run_scenario(ScenarioConfig.from_mapping({**base, "integrator": "expm"}), tmp_path / "e")
    s_rk4 = run_scenario(ScenarioConfig.from_mapping({**base, "integrator": "rk4"}), tmp_path / "r")
    f_e = np.loadtxt(tmp_path / "e" / "trajectory.csv", delimiter=",", skiprows=1)[:, -1]
    f_r = np.loadtxt(tmp_path / "r" / "trajectory.csv", delimiter=",", skiprows=1)[:, -1]
    assert np.max(np.abs(f_e - f_r)) <= 1e-7


def test_doubling_steps_moves_refined_peak_little(tmp_path):
    base = figure_config("fig3")
    s1 = run_scenario(base, tmp_path / "n1")
    from dataclasses import replace
    s2 = run_scenario(replace(base, n_steps=2 * (base.n_steps - 1) + 1), tmp_path / "n2")
    assert abs(s1["peak_fidelity"] - s2["peak_fidelity"]) < 1e-4


def test_nb4_mode_runs_and_reports_leakage(tmp_path):
    cfg = ScenarioConfig.from_mapping(small_master_mapping(
        dims={"n_cav": 2, "n_b": 4}, n_steps=201, t_max_us=0.2))
    summary = run_scenario(cfg, tmp_path)
    assert summary["leakage_max"] > 0.0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert "leakage_00" in header


def test_bloch_master_run(tmp_path):
    cfg = ScenarioConfig.from_mapping(small_master_mapping(
        initial={"kind": "schmidt-entangled", "family": "Psi", "grid": [8, 8]},
        n_steps=201, t_max_us=0.2))
    summary = run_scenario(cfg, tmp_path)
    head = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert head[0].startswith("t_s,F_avg_Psi")
    first = float(head[1].split(",")[1])
    # at t = 0 the Psi-family average fidelity is the Bloch average of
    # |<psi|CNOT|psi>| (amplitude convention)
    assert 0.5 < first < 1.0


def test_sweep(tmp_path):
    cfg = ScenarioConfig.from_mapping(small_master_mapping(n_steps=101, t_max_us=0.1))
    manifest = run_sweep(cfg, "params.G_tilde_hz", [1e6, 2e6], tmp_path, jobs=1)
    assert len(manifest["runs"]) == 2
    assert (tmp_path / "manifest.json").exists()
    for entry in manifest["runs"]:
        assert (tmp_path / entry["outdir"] / "trajectory.csv").exists()


def test_figure_config_presets():
    fig3 = figure_config("fig3")
    assert fig3.quadrature_convention == "bare"
    assert fig3.n_cav == 2
    assert fig3.fidelity_convention == "amplitude"
    assert fig3.average_over == ("00", "01", "11")
    fig9 = figure_config("fig9")
    assert isinstance(fig9, list) and len(fig9) == 4
    with pytest.raises(ValueError):
        figure_config("fig11")


def test_cli_gatecheck():
    res = CliRunner().invoke(cli.main, ["gatecheck"])
    assert res.exit_code == 0
    assert "d(U_Gate(t_gate), CNOT)" in res.output
    assert "Omega = 30.04" in res.output


def test_cli_figure_fig2(tmp_path):
    res = CliRunner().invoke(cli.main, ["figure", "fig2", "--out", str(tmp_path)])
    assert res.exit_code == 0
    rows = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert rows[0] == "state,fidelity"
    assert all(line.endswith(",1") for line in rows[1:5])


def test_cli_evolve_and_error_paths(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(small_master_mapping(n_steps=101, t_max_us=0.1)))
    res = CliRunner().invoke(cli.main, ["evolve", "--config", str(cfg_path),
                                        "--out", str(tmp_path / "run")])
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert "peak_fidelity" in payload

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(small_master_mapping(mode="nonsense")))
    res = CliRunner().invoke(cli.main, ["evolve", "--config", str(bad),
                                        "--out", str(tmp_path / "run2")])
    assert res.exit_code == 1
    err = json.loads(res.stderr)
    assert "error" in err
    assert not (tmp_path / "run2" / "trajectory.csv").exists()


def test_cli_spectrum(tmp_path):
    res = CliRunner().invoke(cli.main, ["spectrum", "--out", str(tmp_path)])
    assert res.exit_code == 0
    rows = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert rows[0].startswith("n,E_rad_s,delta_n0_rad_s,X_n0")
    assert len(rows) == 17


def test_cli_outdir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PHONONGATE_OUTDIR", str(tmp_path / "root"))
    res = CliRunner().invoke(cli.main, ["figure", "fig2"])
    assert res.exit_code == 0
    assert (tmp_path / "root" / "fig2" / "trajectory.csv").exists()
