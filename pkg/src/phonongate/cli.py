"""Command-line interface: spectra, gate checks, analytic curves,
master-equation runs, figure data and parameter sweeps, all emitted as CSV
plus a JSON summary.

Output root defaults to $PHONONGATE_OUTDIR, falling back to ./phonongate_out.
"""
from __future__ import annotations

import json
import os
import sys
from dataclasses import replace

import click
import numpy as np

from . import runner
from .duffing import duffing_spectrum
from .gates import cnot_sequence, exchange_unitary, ideal_cnot, phase_aligned_distance
from .hamiltonians import PhysicalParams
from .runner import PAPER_VA_XG_SQ, PRESETS, ScenarioConfig


def _default_out() -> str:
    return os.environ.get("PHONONGATE_OUTDIR", "phonongate_out")


def _fail(message: str) -> None:
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(1)


def _scenario_from_sources(config_path, preset) -> ScenarioConfig:
    """Build a scenario from a JSON config, a named preset, or both
    (config keys override the preset's parameters)."""
    if config_path is None and preset is None:
        raise ValueError("need --config and/or --preset")
    doc = {}
    if config_path:
        with open(config_path) as fh:
            doc = json.load(fh)
    if preset:
        doc["params"] = {**PRESETS[preset], **doc.get("params", {})}
        doc.setdefault("label", preset)
        doc.setdefault("initial", {"kind": "fixed-list",
                                   "labels": ["00", "01", "10", "11"]})
        doc.setdefault("average_over", ["00", "01", "11"])
    return ScenarioConfig.from_mapping(doc)


@click.group()
def main():
    """Phononic CNOT gate simulator."""


@main.command()
@click.option("--omega-g-hz", type=float, default=28.6e6, show_default=True,
              help="Beam frequency (Hz).")
@click.option("--lambda-hz", "lambda_hz", type=float, default=209e3, show_default=True,
              help="Duffing rate (Hz).")
@click.option("--dim", type=int, default=16, show_default=True)
@click.option("--dim-trust", type=int, default=4, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
def spectrum(omega_g_hz, lambda_hz, dim, dim_trust, out):
    """Dump beam eigenenergies, transition frequencies and X matrix elements."""
    try:
        outdir = out or os.path.join(_default_out(), "spectrum")
        os.makedirs(outdir, exist_ok=True)
        spec = duffing_spectrum(2 * np.pi * omega_g_hz, 2 * np.pi * lambda_hz, dim, dim_trust)
        path = os.path.join(outdir, "spectrum.csv")
        with open(path + ".tmp", "w", newline="\n") as fh:
            header = ["n", "E_rad_s", "delta_n0_rad_s"] + [f"X_n{m}" for m in range(dim_trust)]
            fh.write(",".join(header) + "\n")
            for n in range(dim):
                row = [str(n), format(spec.energies[n], ".17g"),
                       format(spec.energies[n] - spec.energies[0], ".17g")]
                row += [format(spec.X[n, m].real, ".17g") for m in range(dim_trust)]
                fh.write(",".join(row) + "\n")
        os.replace(path + ".tmp", path)
        click.echo(f"wrote {path}")
    except (ValueError, OSError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--g-hz", type=float, default=21e3, show_default=True)
@click.option("--omega-hz", type=float, default=36.6e6, show_default=True)
@click.option("--delta-hz", type=float, default=49.9e6, show_default=True)
@click.option("--xg2", type=float, default=PAPER_VA_XG_SQ, show_default=True,
              help="Squared qubit deflection element X_G^2.")
def gatecheck(g_hz, omega_hz, delta_hz, xg2):
    """Print the exchange rate, the ISWAP check, and the CNOT-sequence distance."""
    try:
        delta, omega_g, g = (2 * np.pi * v for v in (delta_hz, omega_hz, g_hz))
        rate = delta * xg2 * g**2 / (delta**2 - omega_g**2)
        t_gate = np.pi / (2 * rate)
        iswap = np.array([[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]])
        d_iswap = phase_aligned_distance(exchange_unitary(rate, t_gate), iswap)
        d_cnot = phase_aligned_distance(cnot_sequence(rate, t_gate), ideal_cnot())
        click.echo(f"Omega = {rate:.6g} rad/s")
        click.echo(f"t_gate = pi/(2 Omega) = {t_gate:.6g} s")
        click.echo(f"d(U_G(t_gate), ISWAP) = {d_iswap:.3e}")
        click.echo(f"d(U_Gate(t_gate), CNOT) = {d_cnot:.3e}")
    except ValueError as exc:
        _fail(str(exc))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="paper_va",
              show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--t-max-us", type=float, default=None)
def analytic(config_path, preset, out, t_max_us):
    """Closed-form gate-fidelity curves for the analytic parameter set."""
    try:
        outdir = out or os.path.join(_default_out(), "analytic")
        if config_path:
            cfg = _scenario_from_sources(config_path, None)
        else:
            cfg = ScenarioConfig(
                params=PhysicalParams.from_config(PRESETS[preset]),
                initial=runner.fidelity.InitialStateFamily.from_labels(["00", "01", "10", "11"]),
                mode="analytic",
                t_max_us=120e3,
                n_steps=4001,
                X_G_sq=PAPER_VA_XG_SQ,
                outputs=("fidelity", "avg_entangled", "avg_separable"),
                label="analytic",
            )
        if t_max_us:
            cfg = replace(cfg, t_max_us=t_max_us)
        summary = runner.run_scenario(cfg, outdir)
        click.echo(json.dumps({"peak_fidelity": summary["peak_fidelity"],
                               "peak_time_s": summary["peak_time_s"],
                               "outdir": str(outdir)}))
    except (ValueError, OSError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
              help="Base parameter set; config values override per key.")
@click.option("--out", type=click.Path(), default=None)
@click.option("--fixed-step", is_flag=True, help="Deterministic fixed-step integrator.")
@click.option("--nb", type=click.Choice(["2", "4"]), default=None,
              help="Beam truncation override.")
def evolve(config_path, preset, out, fixed_step, nb):
    """Run one master-equation scenario from a JSON config and/or preset."""
    try:
        cfg = _scenario_from_sources(config_path, preset)
        if fixed_step:
            cfg = replace(cfg, integrator="rk4")
        if nb:
            cfg = replace(cfg, n_b=int(nb))
        outdir = out or os.path.join(_default_out(), cfg.label)
        summary = runner.run_scenario(cfg, outdir)
        click.echo(json.dumps({"peak_fidelity": summary["peak_fidelity"],
                               "peak_time_us": summary["peak_time_us"],
                               "outdir": str(outdir)}))
    except (ValueError, OSError) as exc:
        _fail(str(exc))


@main.command()
@click.argument("fig_id", type=click.Choice(
    ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"]))
@click.option("--out", type=click.Path(), default=None)
@click.option("--jobs", type=int, default=None, help="Worker pool size (default: logical CPUs).")
@click.option("--fixed-step", is_flag=True)
@click.option("--nb", type=click.Choice(["2", "4"]), default="2")
@click.option("--bloch-grid", type=int, default=16, show_default=True,
              help="Angular points per axis for fig9/fig10.")
def figure(fig_id, out, jobs, fixed_step, nb, bloch_grid):
    """Emit the CSV data behind one published figure."""
    try:
        outdir = out or os.path.join(_default_out(), fig_id)
        jobs = jobs or os.cpu_count() or 1
        summary = runner.run_figure(fig_id, outdir, n_b=int(nb), jobs=jobs,
                                    fixed_step=fixed_step,
                                    bloch_grid=(bloch_grid, bloch_grid))
        click.echo(json.dumps({"figure": fig_id, "outdir": str(outdir),
                               "peak_fidelity": summary.get("peak_fidelity")}))
    except (ValueError, OSError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--param", required=True, help="Dotted config key, e.g. params.g_G_hz.")
@click.option("--values", required=True, help="Comma-separated numeric values.")
@click.option("--out", type=click.Path(), default=None)
@click.option("--jobs", type=int, default=None, help="Worker pool size (default: logical CPUs).")
def sweep(config_path, preset, param, values, out, jobs):
    """Re-run one scenario while varying a single named parameter."""
    try:
        jobs = jobs or os.cpu_count() or 1
        cfg = _scenario_from_sources(config_path, preset)
        vals = [float(v) for v in values.split(",") if v.strip()]
        if not vals:
            raise ValueError("no sweep values given")
        outdir = out or os.path.join(_default_out(), f"sweep_{param.replace('.', '_')}")
        manifest = runner.run_sweep(cfg, param, vals, outdir, jobs=jobs)
        click.echo(json.dumps({"param": param, "n_runs": len(vals), "outdir": str(outdir)}))
    except (ValueError, OSError) as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
