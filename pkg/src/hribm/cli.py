"""Configuration, scenario drivers, and the command-line surface.

Config files are flat ``key = value`` INI text with one section per
concern; every key has a default reproducing the production constant set
(water scales, 10 um reference length, kernel radius 0.033, connection
cutoff 0.162, force constant 1.3223e-9 N).  Unknown sections or keys are
rejected.  Each run writes a manifest that is itself a loadable config,
so any run is reproducible from its manifest alone.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path
from typing import Dict, Optional

import numpy as np

import hribm
from hribm.biofilm import (
    SpreadParams,
    generate_synthetic_biofilm,
    read_positions,
    write_positions,
)
from hribm.rheology import (
    CreepConfig,
    SarConfig,
    TumbleConfig,
    blaser_period,
    run_creep,
    run_sar,
    run_tumble,
)
from hribm.solvers import SolverConfig
from hribm.validation import (
    ChannelConfig,
    analytic_error,
    run_channel,
    spatial_convergence,
    temporal_convergence,
)

SCENARIOS = ("validate-fluid", "convergence", "sar", "creep", "tumble", "gen-biofilm")


class ConfigError(ValueError):
    """Bad, missing, or unknown configuration input."""


class ScenarioError(RuntimeError):
    """A driver failed while running a scenario."""


DEFAULTS: Dict[str, Dict[str, str]] = {
    "grid": {
        "nx": "32",
        "extent_x": "0.9",
        "extent_y": "2.7",
        "extent_z": "0.9",
    },
    "physical": {
        "mu0_pa_s": "1e-3",
        "rho0_kg_m3": "998.0",
        "l_m": "1e-5",
        "t0_s": "1.0",
        "p0_pa": "1.0",
        "f0_n_m3": "1.0",
        "omega": "0.033",
        "mu_b": "250.0",
        "rho_b": "0.12",
        "d0": "0.159",
        "cutoff": "0.162",
        "gamma": "0.04",
        "f_max_n": "1.3223e-9",
    },
    "solver": {
        "rel_tol": "1e-4",
        "rel_tol_pressure": "1e-8",
        "max_iter": "400",
        "mg_levels": "0",
        "pre_sweeps": "1",
        "post_sweeps": "1",
        "cycle": "V",
        "smoother": "sgs",
        "jacobi_weight": "0.8",
    },
    "sar": {
        "nu_rad_s": "49.91",
        "strain_amplitude": "0.13",
        "steps_per_radian": "1000",
        "periods_after_ramp": "2.0",
        "ramp_periods": "0.5",
        "seed": "1",
        "tracer_columns": "8",
        "record_stride": "4",
        "springs_enabled": "true",
        "uniform_material": "false",
        "positions_file": "",
    },
    "creep": {
        "extent_x": "0.9",
        "extent_y": "1.35",
        "extent_z": "0.9",
        "nx": "32",
        "sigma0_pa": "1.0",
        "f_max_n": "2.9091e-9",
        "dt_s": "6e-6",
        "t_final_s": "0.1",
        "mass_band": "0.24",
        "mollifier_alpha": "200.0",
        "seed": "1",
        "tracer_columns": "8",
        "record_stride": "10",
        "positions_file": "",
    },
    "tumble": {
        "extent_x": "1.0",
        "extent_y": "4.5",
        "extent_z": "1.5",
        "nx": "16",
        "semi_x": "0.30",
        "semi_y": "0.136",
        "semi_z": "0.167",
        "min_separation": "0.07",
        "count": "54",
        "f_max_n": "1.3223e-11",
        "plate_speed_m_s": "1e-3",
        "dt_s": "5e-4",
        "t_final_s": "6.0",
        "window_start_s": "2.5",
        "window_end_s": "6.0",
        "seed": "3",
        "record_stride": "10",
    },
    "validate": {
        "nu_rad_s": "1.0",
        "ny": "64",
        "nu_dt": "0.002",
        "mu_pa_s": "1.0",
        "rho_kg_m3": "998.0",
        "extent_x": "0.25",
        "extent_y": "1.0",
        "extent_z": "0.25",
    },
    "convergence": {
        "nu_rad_s": "1.0",
        "ny": "32",
        "nu_dt": "0.002",
        "temporal_ny": "64",
        "temporal_nu_dt": "0.008",
        "biofilm": "false",
        "seed": "1",
        "extent_x": "0.25",
        "extent_y": "1.0",
        "extent_z": "0.25",
        "rel_tol": "1e-12",
    },
    "gen-biofilm": {
        "extent_x": "0.9",
        "extent_y": "2.7",
        "extent_z": "0.9",
        "d0": "0.159",
        "min_separation": "0.13",
        "y_margin": "0.0",
        "seed": "1",
        "filename": "positions.txt",
    },
}


def load_config(path: Optional[str] = None) -> Dict[str, Dict[str, str]]:
    """Defaults merged with the optional config file; unknown keys rejected."""
    conf = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    if path is None:
        return conf
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(p.read_text())
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    for sec in parser.sections():
        if sec not in conf:
            raise ConfigError(f"unknown config section [{sec}]")
        for key, val in parser.items(sec):
            if key not in conf[sec]:
                raise ConfigError(f"unknown key '{key}' in section [{sec}]")
            conf[sec][key] = val
    return conf


def _f(conf, sec, key) -> float:
    try:
        return float(conf[sec][key])
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key} = {conf[sec][key]!r} is not a number") from exc


def _i(conf, sec, key) -> int:
    try:
        return int(conf[sec][key])
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key} = {conf[sec][key]!r} is not an integer") from exc


def _b(conf, sec, key) -> bool:
    val = conf[sec][key].strip().lower()
    if val in ("true", "yes", "on", "1"):
        return True
    if val in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"[{sec}] {key} = {conf[sec][key]!r} is not a boolean")


def _check_scales(conf) -> None:
    # converters to and from micrometers live here; the solver core is
    # written against the 10 um reference length
    if abs(_f(conf, "physical", "l_m") - 1e-5) > 1e-20:
        raise ConfigError("l_m is fixed at 1e-5 m in this build")
    if abs(_f(conf, "physical", "t0_s") - 1.0) > 1e-15:
        raise ConfigError("t0_s is fixed at 1 s in this build")


def _solver_config(conf, rel_tol_override: Optional[float] = None) -> SolverConfig:
    return SolverConfig(
        rel_tol=rel_tol_override if rel_tol_override is not None else _f(conf, "solver", "rel_tol"),
        rel_tol_pressure=_f(conf, "solver", "rel_tol_pressure"),
        max_iter=_i(conf, "solver", "max_iter"),
        mg_levels=_i(conf, "solver", "mg_levels"),
        pre_sweeps=_i(conf, "solver", "pre_sweeps"),
        post_sweeps=_i(conf, "solver", "post_sweeps"),
        cycle=conf["solver"]["cycle"],
        smoother=conf["solver"]["smoother"],
    )


def _spread_params(conf) -> SpreadParams:
    return SpreadParams(
        omega=_f(conf, "physical", "omega"),
        mu_b=_f(conf, "physical", "mu_b"),
        rho_b=_f(conf, "physical", "rho_b"),
        F_max=_f(conf, "physical", "f_max_n"),
    )


def _positions(conf, sec) -> Optional[np.ndarray]:
    name = conf[sec]["positions_file"].strip()
    if not name:
        return None
    p = Path(name)
    if not p.is_file():
        raise ConfigError(f"positions file not found: {name}")
    return read_positions(p)


def write_manifest(path: Path, scenario: str, conf, seed: Optional[int], threads: int) -> None:
    lines = [
        "# hribm run manifest (reloadable as a config file)",
        f"# package hribm {hribm.__version__}, numpy {np.__version__}",
        f"# scenario: {scenario}",
        f"# seed: {'config' if seed is None else seed}",
        f"# threads: {threads}",
    ]
    for sec, vals in conf.items():
        lines.append(f"[{sec}]")
        for key, val in vals.items():
            lines.append(f"{key} = {val}")
        lines.append("")
    path.write_text("\n".join(lines))


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.10g}" if isinstance(x, float) else x for x in row])


# ---------------------------------------------------------------------------
# scenario implementations
# ---------------------------------------------------------------------------

def _scenario_gen_biofilm(conf, out: Path, seed):
    sec = "gen-biofilm"
    X = generate_synthetic_biofilm(
        (_f(conf, sec, "extent_x"), _f(conf, sec, "extent_y"), _f(conf, sec, "extent_z")),
        d0=_f(conf, sec, "d0"),
        min_separation=_f(conf, sec, "min_separation"),
        seed=seed if seed is not None else _i(conf, sec, "seed"),
        y_margin=_f(conf, sec, "y_margin"),
    )
    dest = out / conf[sec]["filename"]
    write_positions(dest, X, header=f"synthetic biofilm, {X.shape[0]} bacteria")
    return [dest]


def _sar_config_from(conf, seed) -> SarConfig:
    return SarConfig(
        nu=_f(conf, "sar", "nu_rad_s"),
        strain_amplitude=_f(conf, "sar", "strain_amplitude"),
        extents=(
            _f(conf, "grid", "extent_x"),
            _f(conf, "grid", "extent_y"),
            _f(conf, "grid", "extent_z"),
        ),
        nx=_i(conf, "grid", "nx"),
        d0=_f(conf, "physical", "d0"),
        cutoff=_f(conf, "physical", "cutoff"),
        f_max=_f(conf, "physical", "f_max_n"),
        spread=_spread_params(conf),
        gamma=_f(conf, "physical", "gamma"),
        seed=seed if seed is not None else _i(conf, "sar", "seed"),
        steps_per_radian=_f(conf, "sar", "steps_per_radian"),
        periods_after_ramp=_f(conf, "sar", "periods_after_ramp"),
        ramp_periods=_f(conf, "sar", "ramp_periods"),
        tracer_columns=_i(conf, "sar", "tracer_columns"),
        springs_enabled=_b(conf, "sar", "springs_enabled"),
        uniform_material=_b(conf, "sar", "uniform_material"),
        record_stride=_i(conf, "sar", "record_stride"),
        positions=_positions(conf, "sar"),
        solver=_solver_config(conf),
    )


def _scenario_sar(conf, out: Path, seed):
    series, moduli = run_sar(_sar_config_from(conf, seed))
    series_path = out / "rheo_series.csv"
    moduli_path = out / "moduli.csv"
    series.write_csv(series_path)
    moduli.write_csv(moduli_path)
    return [series_path, moduli_path]


def _scenario_creep(conf, out: Path, seed):
    cfg = CreepConfig(
        sigma0=_f(conf, "creep", "sigma0_pa"),
        f_max=_f(conf, "creep", "f_max_n"),
        extents=(
            _f(conf, "creep", "extent_x"),
            _f(conf, "creep", "extent_y"),
            _f(conf, "creep", "extent_z"),
        ),
        nx=_i(conf, "creep", "nx"),
        d0=_f(conf, "physical", "d0"),
        cutoff=_f(conf, "physical", "cutoff"),
        spread=_spread_params(conf),
        gamma=_f(conf, "physical", "gamma"),
        mass_band=_f(conf, "creep", "mass_band"),
        mollifier_alpha=_f(conf, "creep", "mollifier_alpha"),
        t_final=_f(conf, "creep", "t_final_s"),
        dt=_f(conf, "creep", "dt_s"),
        seed=seed if seed is not None else _i(conf, "creep", "seed"),
        tracer_columns=_i(conf, "creep", "tracer_columns"),
        record_stride=_i(conf, "creep", "record_stride"),
        positions=_positions(conf, "creep"),
        solver=_solver_config(conf),
    )
    times, J, series = run_creep(cfg)
    series_path = out / "rheo_series.csv"
    series.write_csv(series_path)
    comp_path = out / "compliance.csv"
    _write_rows(comp_path, ["t_seconds", "compliance_per_Pa"], zip(times.tolist(), J.tolist()))
    return [series_path, comp_path]


def _scenario_tumble(conf, out: Path, seed):
    sec = "tumble"
    cfg = TumbleConfig(
        extents=(_f(conf, sec, "extent_x"), _f(conf, sec, "extent_y"), _f(conf, sec, "extent_z")),
        nx=_i(conf, sec, "nx"),
        semi_axes=(_f(conf, sec, "semi_x"), _f(conf, sec, "semi_y"), _f(conf, sec, "semi_z")),
        min_separation=_f(conf, sec, "min_separation"),
        count=_i(conf, sec, "count"),
        cutoff=_f(conf, "physical", "cutoff"),
        f_max=_f(conf, sec, "f_max_n"),
        spread=_spread_params(conf),
        d0=_f(conf, "physical", "d0"),
        plate_speed=_f(conf, sec, "plate_speed_m_s"),
        dt=_f(conf, sec, "dt_s"),
        t_final=_f(conf, sec, "t_final_s"),
        window=(_f(conf, sec, "window_start_s"), _f(conf, sec, "window_end_s")),
        seed=seed if seed is not None else _i(conf, sec, "seed"),
        record_stride=_i(conf, sec, "record_stride"),
        solver=_solver_config(conf),
    )
    times, traj, period, ellipse, tau_mean = run_tumble(cfg)
    um = 10.0  # micrometers per length unit
    traj_path = out / "trajectories.csv"
    rows = []
    for it, t in enumerate(times):
        for s in range(traj.shape[1]):
            rows.append(
                (float(t), s, traj[it, s, 0] * um, traj[it, s, 1] * um, traj[it, s, 2] * um)
            )
    _write_rows(traj_path, ["t_seconds", "bacterium", "x_um", "y_um", "z_um"], rows)
    summary_path = out / "tumble_summary.csv"
    ref = blaser_period(ellipse.a1 * um, ellipse.a2 * um, tau_mean)
    _write_rows(
        summary_path,
        ["a1_um", "a2_um", "shear_rate_per_s", "observed_period_s", "reference_period_s"],
        [(ellipse.a1 * um, ellipse.a2 * um, tau_mean, period, ref)],
    )
    return [traj_path, summary_path]


def _scenario_validate(conf, out: Path, seed):
    sec = "validate"
    cfg = ChannelConfig(
        nu=_f(conf, sec, "nu_rad_s"),
        ny=_i(conf, sec, "ny"),
        extents=(_f(conf, sec, "extent_x"), _f(conf, sec, "extent_y"), _f(conf, sec, "extent_z")),
        nu_dt=_f(conf, sec, "nu_dt"),
        mu_si=_f(conf, sec, "mu_pa_s"),
        rho_si=_f(conf, sec, "rho_kg_m3"),
        solver=SolverConfig(rel_tol=1e-12, smoother=conf["solver"]["smoother"]),
    )
    state = run_channel(cfg)
    err = analytic_error(state, cfg)
    path = out / "validation.csv"
    _write_rows(
        path,
        ["nu_rad_s", "ny", "nu_dt", "max_error_m_per_s"],
        [(cfg.nu, cfg.ny, cfg.nu_dt, err)],
    )
    return [path]


def _scenario_convergence(conf, out: Path, seed):
    sec = "convergence"
    base = dict(
        nu=_f(conf, sec, "nu_rad_s"),
        extents=(_f(conf, sec, "extent_x"), _f(conf, sec, "extent_y"), _f(conf, sec, "extent_z")),
        solver=SolverConfig(rel_tol=_f(conf, sec, "rel_tol"), smoother=conf["solver"]["smoother"]),
    )
    if _b(conf, sec, "biofilm"):
        base["biofilm_seed"] = seed if seed is not None else _i(conf, sec, "seed")
        base["spread"] = _spread_params(conf)
        base["f_max"] = _f(conf, "physical", "f_max_n")
        base["cutoff"] = _f(conf, "physical", "cutoff")
        base["d0"] = _f(conf, "physical", "d0")
    paths = []
    rep_s, rep_sx = spatial_convergence(
        ChannelConfig(ny=_i(conf, sec, "ny"), nu_dt=_f(conf, sec, "nu_dt"), **base)
    )
    p = out / "convergence_spatial.csv"
    rep_s.write_csv(p)
    paths.append(p)
    rep_t, rep_tx = temporal_convergence(
        ChannelConfig(ny=_i(conf, sec, "temporal_ny"), nu_dt=_f(conf, sec, "temporal_nu_dt"), **base)
    )
    p = out / "convergence_temporal.csv"
    rep_t.write_csv(p)
    paths.append(p)
    for rep, name in ((rep_sx, "convergence_spatial_positions.csv"),
                      (rep_tx, "convergence_temporal_positions.csv")):
        if rep is not None:
            p = out / name
            rep.write_csv(p)
            paths.append(p)
    return paths


_DISPATCH = {
    "gen-biofilm": _scenario_gen_biofilm,
    "sar": _scenario_sar,
    "creep": _scenario_creep,
    "tumble": _scenario_tumble,
    "validate-fluid": _scenario_validate,
    "convergence": _scenario_convergence,
}


def run_scenario(
    scenario: str,
    config_path: Optional[str] = None,
    out_dir: str = ".",
    seed: Optional[int] = None,
    threads: int = 1,
):
    """Dispatch a named scenario; returns the list of artifact paths."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    conf = load_config(config_path)
    _check_scales(conf)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # record the effective seed so the manifest alone reproduces the run
    sec = {"validate-fluid": "validate"}.get(scenario, scenario)
    if seed is not None and "seed" in conf.get(sec, {}):
        conf[sec]["seed"] = str(seed)
    write_manifest(out / "manifest.txt", scenario, conf, seed, threads)
    try:
        artifacts = _DISPATCH[scenario](conf, out, seed)
    except ConfigError:
        raise
    except Exception as exc:
        raise ScenarioError(f"{scenario} failed: {exc}") from exc
    return [out / "manifest.txt"] + artifacts


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hribm",
        description="Immersed-boundary biofilm rheology scenarios",
    )
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", default=None, help="INI config file (defaults used if omitted)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="recorded in the manifest; kernels run single-threaded")
    args = parser.parse_args(argv)
    try:
        artifacts = run_scenario(args.scenario, args.config, args.out, args.seed, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    for p in artifacts:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
