"""Command surface: configuration, persistence, manifests, orchestration.

Stages write their artifacts under ``<out>/<stage>/`` together with a
manifest recording the hash of the configuration slice they depend on;
re-running a stage whose manifest matches is a no-op.  Stage chaining goes
through the artifacts on disk only, so every command can run in a fresh
process.

Exit codes: 0 success, 2 configuration error, 3 missing upstream stage,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__, analysis, benchmarks, svgplot
from .constants import (ANGSTROM_TO_BOHR, HARTREE_TO_EV, ev_to_hartree,
                        omega0_from_wavelength_nm)
from .model import (BoundState, Grid1D, MoleculeModel, build_model,
                    default_ground_grid, ground_state, retune_screening)
from .pt2 import detector_states, pt2_box_for, pt2_sideband_phase
from .rabbit import (BASE_SIDEBANDS, MolecularDelayRecord, RabbitSpectrogram,
                     build_setup, fit_spectrogram, integrate_sideband,
                     ladder_scale, molecular_delay, run_delay_point,
                     sideband_energy, tau_samples)

_POINT_FORMAT = 2
from .wigner import (DelayTable, THETA_LABELS, WignerDelayRecord,
                     WignerEngine, wigner_energy_scan)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEPENDENCY = 3
EXIT_NUMERICAL = 4


DEFAULT_CONFIG = {
    "model": {
        "q": 0.33,
        "a_angstrom": 0.198,
        "r_angstrom": 1.115,
        "geometry": "anchored",
        "anchor_mean_x_angstrom": -0.16,
    },
    "ground": {"box_au": 30.0, "dx_au": 0.025},
    "wigner": {
        "eps_min_ev": 1.0,
        "eps_max_ev": 15.0,
        "eps_step_ev": 0.25,
        "xref_angstrom": [-0.2, 0.0, 0.2],
        "include_mean_xref": True,
        "reference": "coulomb",
        "gauge": "length",
        "deps_au": 1e-3,
        "r_max_au": 2600.0,
    },
    "rabbit": {
        "lambdas_nm": [800.0, 1600.0, 3200.0, 6400.0, 12800.0],
        "tdse_lambdas_nm": [800.0, 1600.0, 3200.0, 6400.0],
        "sidebands": list(BASE_SIDEBANDS),
        "n_tau": 16,
        "t_pulse_fs": 40.0,
        "t_free_fs": 3.0,
        "gamma_800_au": 0.0035,
        "integration_halfwidth": 0.8,
        "xuv_intensity_w_cm2": 1e10,
        "ir_intensity_800_w_cm2": 1e10,
        "dt_au": 0.05,
        "dx_au": 0.15,
    },
    "pt2": {"lambdas_nm": [800.0, 1600.0, 3200.0, 6400.0, 12800.0],
            "eta_scale": 0.09},
    "analysis": {"fit_effective_charge": True, "fit_power_law": True},
    "output": {"dir": "runs"},
}

_STAGE_SECTIONS = {
    "ground": ("model", "ground"),
    "wigner": ("model", "ground", "wigner"),
    "rabbit": ("model", "ground", "rabbit"),
    "pt2": ("model", "ground", "pt2", "rabbit"),
    "analyze": ("model", "ground", "wigner", "rabbit", "pt2", "analysis"),
    "tables": ("model", "ground", "wigner", "rabbit", "pt2", "analysis"),
}


class ConfigError(ValueError):
    pass


def load_config(path: str | None) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    if path is not None:
        try:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error in {path}: {exc}")
        for section, values in user.items():
            if section not in cfg:
                raise ConfigError(f"unknown config section [{section}]")
            if not isinstance(values, dict):
                raise ConfigError(f"section [{section}] must be a table")
            for key, val in values.items():
                if key not in cfg[section]:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                cfg[section][key] = val
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    m = cfg["model"]
    if not 0.0 < m["q"] < 1.0:
        raise ConfigError(f"model.q must lie in (0, 1), got {m['q']}")
    for key in ("a_angstrom", "r_angstrom"):
        if m[key] <= 0:
            raise ConfigError(f"model.{key} must be positive")
    if m["geometry"] not in ("anchored", "symmetric"):
        raise ConfigError(f"model.geometry must be 'anchored' or 'symmetric'")
    w = cfg["wigner"]
    if w["eps_min_ev"] <= 0 or w["eps_max_ev"] <= w["eps_min_ev"]:
        raise ConfigError("wigner energy window must satisfy 0 < min < max")
    if w["reference"] not in ("coulomb", "plane"):
        raise ConfigError("wigner.reference must be 'coulomb' or 'plane'")
    if w["gauge"] not in ("length", "velocity"):
        raise ConfigError("wigner.gauge must be 'length' or 'velocity'")
    r = cfg["rabbit"]
    for key in ("n_tau", "t_pulse_fs", "t_free_fs", "gamma_800_au", "dt_au", "dx_au",
                "xuv_intensity_w_cm2", "ir_intensity_800_w_cm2"):
        if r[key] <= 0:
            raise ConfigError(f"rabbit.{key} must be positive")
    if r["n_tau"] < 8:
        raise ConfigError("rabbit.n_tau must be at least 8 (one oscillation, fit margin)")
    if not 0.3 <= r["integration_halfwidth"] <= 0.95:
        raise ConfigError("rabbit.integration_halfwidth must lie in [0.3, 0.95]")
    for lam in r["lambdas_nm"]:
        try:
            ladder_scale(lam)
        except ValueError as exc:
            raise ConfigError(str(exc))
    if not set(r["tdse_lambdas_nm"]) <= set(r["lambdas_nm"]):
        raise ConfigError("rabbit.tdse_lambdas_nm must be a subset of rabbit.lambdas_nm")


def config_hash(cfg: dict, sections) -> str:
    payload = {s: cfg[s] for s in sections}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ----------------------------------------------------------------------
# manifests
# ----------------------------------------------------------------------

def _manifest_path(outdir: Path, stage: str) -> Path:
    return outdir / stage / "manifest.json"


def read_manifest(outdir: Path, stage: str) -> dict | None:
    path = _manifest_path(outdir, stage)
    if not path.exists():
        return None
    with open(path) as fh:
        return json.load(fh)


def write_manifest(outdir: Path, stage: str, cfg_hash: str, files: list,
                   wall_time: float, extras: dict | None = None) -> dict:
    manifest = {
        "stage": stage,
        "config_hash": cfg_hash,
        "code_version": __version__,
        "wall_time_s": round(wall_time, 3),
        "files": sorted(files),
    }
    if extras:
        manifest["derived"] = extras
    path = _manifest_path(outdir, stage)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def require_stage(outdir: Path, stage: str, cfg: dict) -> dict:
    manifest = read_manifest(outdir, stage)
    if manifest is None or manifest["config_hash"] != config_hash(cfg, _STAGE_SECTIONS[stage]):
        raise DependencyError(stage)
    return manifest


class DependencyError(RuntimeError):
    def __init__(self, stage):
        super().__init__(f"stage '{stage}' missing or stale; "
                         f"run `moldelays {stage}` first")
        self.stage = stage


# ----------------------------------------------------------------------
# artifact I/O
# ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.12g}"


def save_ground(stage_dir: Path, model: MoleculeModel, gs: BoundState) -> list:
    files = []
    csv_path = stage_dir / "ground.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_bohr", "amplitude"])
        for x, a in zip(gs.grid.x, gs.wavefunction):
            writer.writerow([_fmt(x), _fmt(a)])
    files.append(str(csv_path))
    meta = {
        "E0_hartree": gs.energy,
        "EI_eV": gs.ionization_potential_ev,
        "mean_x_angstrom": gs.mean_position / ANGSTROM_TO_BOHR,
        "model": {"q": model.q, "a_bohr": model.a, "x1_bohr": model.x1,
                  "x2_bohr": model.x2},
        "grid": {"x_min": gs.grid.x_min, "x_max": gs.grid.x_max, "n": gs.grid.n},
    }
    json_path = stage_dir / "ground.json"
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    files.append(str(json_path))
    return files


def load_ground(outdir: Path):
    with open(outdir / "ground" / "ground.json") as fh:
        meta = json.load(fh)
    m = meta["model"]
    model = MoleculeModel(q=m["q"], a=m["a_bohr"], x1=m["x1_bohr"], x2=m["x2_bohr"])
    g = meta["grid"]
    grid = Grid1D(x_min=g["x_min"], x_max=g["x_max"], n=g["n"])
    data = np.loadtxt(outdir / "ground" / "ground.csv", delimiter=",", skiprows=1)
    gs = BoundState(energy=meta["E0_hartree"], grid=grid, wavefunction=data[:, 1],
                    mean_position=meta["mean_x_angstrom"] * ANGSTROM_TO_BOHR)
    return model, gs, meta


def save_delay_table(stage_dir: Path, table: DelayTable, meta: dict) -> list:
    files = []
    csv_path = stage_dir / "delays.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps_eV", "theta_deg", "xref_angstrom", "tau_as",
                         "reference_kind", "gauge"])
        for r in table.records:
            writer.writerow([_fmt(r.energy * HARTREE_TO_EV), r.theta,
                             _fmt(r.x_ref / ANGSTROM_TO_BOHR), _fmt(r.tau_as),
                             r.reference_kind, r.gauge])
    files.append(str(csv_path))
    meta_path = stage_dir / "meta.json"
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    files.append(str(meta_path))
    return files


def load_delay_table(outdir: Path) -> tuple[DelayTable, dict]:
    with open(outdir / "wigner" / "meta.json") as fh:
        meta = json.load(fh)
    records = []
    with open(outdir / "wigner" / "delays.csv") as fh:
        for row in csv.DictReader(fh):
            records.append(WignerDelayRecord(
                energy=float(row["eps_eV"]) / HARTREE_TO_EV,
                theta=int(row["theta_deg"]),
                x_ref=float(row["xref_angstrom"]) * ANGSTROM_TO_BOHR,
                tau_as=float(row["tau_as"]), deps=meta["deps_au"],
                reference_kind=row["reference_kind"], gauge=row["gauge"]))
    return DelayTable(records=records,
                      canonical_x_ref=meta["canonical_xref_angstrom"] * ANGSTROM_TO_BOHR), meta


def load_molecular_records(outdir: Path, source: str) -> list:
    path = outdir / source / "molecular_delays.json"
    if not path.exists():
        return []
    with open(path) as fh:
        rows = json.load(fh)
    return [MolecularDelayRecord(**row) for row in rows]


def save_molecular_records(path: Path, records: list) -> None:
    rows = [{"lambda_nm": r.lambda_nm, "base_order": r.base_order, "eps": r.eps,
             "theta": r.theta, "phase": r.phase, "tau_mol_as": r.tau_mol_as,
             "method": r.method} for r in records]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)


# ----------------------------------------------------------------------
# stage commands
# ----------------------------------------------------------------------

def cmd_ground(cfg: dict, outdir: Path, retune: bool = False) -> int:
    sections = _STAGE_SECTIONS["ground"]
    h = config_hash(cfg, sections) + ("-retuned" if retune else "")
    manifest = read_manifest(outdir, "ground")
    if manifest and manifest["config_hash"] == h:
        print("ground: up to date")
        return EXIT_OK
    t0 = time.time()
    m = cfg["model"]
    g = cfg["ground"]
    grid = default_ground_grid(g["box_au"], g["dx_au"])
    model = build_model(m["q"], m["a_angstrom"], m["r_angstrom"], m["geometry"],
                        m["anchor_mean_x_angstrom"], grid=grid)
    tuned_a = None
    gs = ground_state(model, grid)
    if retune:
        model, _ = retune_screening(model, benchmarks.IONIZATION_POTENTIAL_EV, grid)
        if m["geometry"] == "anchored":
            model = build_model(m["q"], model.a / ANGSTROM_TO_BOHR, m["r_angstrom"],
                                "anchored", m["anchor_mean_x_angstrom"], grid=grid)
        tuned_a = model.a
        gs = ground_state(model, grid)
    stage_dir = outdir / "ground"
    stage_dir.mkdir(parents=True, exist_ok=True)
    files = save_ground(stage_dir, model, gs)
    extras = {
        "EI_eV": gs.ionization_potential_ev,
        "mean_x_angstrom": gs.mean_position / ANGSTROM_TO_BOHR,
        "a_bohr": model.a,
        "tuned_a_bohr": tuned_a,
    }
    write_manifest(outdir, "ground", h, files, time.time() - t0, extras)
    print(f"ground: E_I = {gs.ionization_potential_ev:.3f} eV, "
          f"<x>_0 = {gs.mean_position / ANGSTROM_TO_BOHR:+.4f} A")
    return EXIT_OK


def cmd_wigner(cfg: dict, outdir: Path, dump_channels_xref: float | None = None) -> int:
    require_stage(outdir, "ground", cfg)
    sections = _STAGE_SECTIONS["wigner"]
    h = config_hash(cfg, sections)
    manifest = read_manifest(outdir, "wigner")
    if manifest and manifest["config_hash"] == h:
        print("wigner: up to date")
        return EXIT_OK
    t0 = time.time()
    model, gs, _ = load_ground(outdir)
    w = cfg["wigner"]
    eps = np.arange(w["eps_min_ev"], w["eps_max_ev"] + 1e-9, w["eps_step_ev"])
    eps = np.array(sorted(set(np.round(eps, 10)) | _sideband_eps_ev(cfg, gs)))
    eps_au = eps / HARTREE_TO_EV
    x_refs = [x * ANGSTROM_TO_BOHR for x in w["xref_angstrom"]]
    canonical = None
    if w["include_mean_xref"]:
        canonical = gs.mean_position
        if not any(abs(x - canonical) < 1e-9 for x in x_refs):
            x_refs.append(canonical)
    table = wigner_energy_scan(model, gs, eps_au, x_refs, canonical_x_ref=canonical,
                               gauge=w["gauge"], reference_kind=w["reference"],
                               deps=w["deps_au"], r_max=w["r_max_au"])
    stage_dir = outdir / "wigner"
    stage_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "deps_au": w["deps_au"],
        "r_max_au": w["r_max_au"],
        "canonical_xref_angstrom": (canonical / ANGSTROM_TO_BOHR) if canonical is not None else None,
        "gauge": w["gauge"],
        "reference_kind": w["reference"],
        "mean_x_angstrom": gs.mean_position / ANGSTROM_TO_BOHR,
    }
    files = save_delay_table(stage_dir, table, meta)
    if dump_channels_xref is not None:
        from .partial_wave import (PolarFrame, decompose_potential, dump_channels,
                                   solve_coupled)
        frame = PolarFrame(dump_channels_xref * ANGSTROM_TO_BOHR)
        v0, v1 = decompose_potential(model.potential, frame)
        pair = solve_coupled(ev_to_hartree(benchmarks.WIGNER_EPS_EV), v0, v1, frame,
                             r_max=w["r_max_au"])
        path = stage_dir / "channels.csv"
        dump_channels(pair, path)
        files.append(str(path))
    write_manifest(outdir, "wigner", h, files, time.time() - t0,
                   {"n_energies": int(eps.size), "mean_x_angstrom": meta["mean_x_angstrom"]})
    print(f"wigner: {len(table.records)} delay records over {eps.size} energies, "
          f"{len(x_refs)} origins")
    return EXIT_OK


def _sideband_eps_ev(cfg: dict, gs: BoundState) -> set:
    w0_800 = omega0_from_wavelength_nm(800.0)
    e_i = -gs.energy
    out = {round(sideband_energy(q2, w0_800, e_i) * HARTREE_TO_EV, 10)
           for q2 in cfg["rabbit"]["sidebands"]}
    out.add(benchmarks.WIGNER_EPS_EV)
    return out


def _rabbit_point_job(args):
    setup, j, tau = args
    return j, run_delay_point(setup, tau)


def cmd_rabbit(cfg: dict, outdir: Path, lambdas=None, sidebands=None,
               workers: int = 0, resume: bool = False) -> int:
    require_stage(outdir, "ground", cfg)
    sections = _STAGE_SECTIONS["rabbit"]
    h = config_hash(cfg, sections)
    manifest = read_manifest(outdir, "rabbit")
    if manifest and manifest["config_hash"] == h and not resume:
        print("rabbit: up to date")
        return EXIT_OK
    t0 = time.time()
    model, gs, _ = load_ground(outdir)
    r = cfg["rabbit"]
    lambdas = [float(l) for l in (lambdas or r["tdse_lambdas_nm"])]
    sidebands = tuple(int(s) for s in (sidebands or r["sidebands"]))
    workers = workers or os.cpu_count() or 1
    stage_dir = outdir / "rabbit"
    stage_dir.mkdir(parents=True, exist_ok=True)
    all_records = []
    all_norm_devs = []
    files = []
    fit_rows = {}
    for lam in lambdas:
        lam_dir = stage_dir / f"lambda_{int(lam)}"
        points_dir = lam_dir / "points"
        points_dir.mkdir(parents=True, exist_ok=True)
        setup = build_setup(model, lam, -gs.energy, sidebands,
                            dt=r["dt_au"], dx=r["dx_au"], t_free_fs=r["t_free_fs"],
                            gamma_800=r["gamma_800_au"],
                            halfwidth=r["integration_halfwidth"],
                            xuv_intensity=r["xuv_intensity_w_cm2"],
                            ir_intensity_800=r["ir_intensity_800_w_cm2"],
                            duration_fs=r["t_pulse_fs"], n_tau=r["n_tau"])
        taus = tau_samples(lam, r["n_tau"])
        done = {}
        norm_devs = []
        jobs = []
        for j, tau in enumerate(taus):
            point_path = points_dir / f"tau_{j:02d}.json"
            if resume and point_path.exists():
                with open(point_path) as fh:
                    payload = json.load(fh)
                if (payload.get("config_hash") == h
                        and payload.get("format") == _POINT_FORMAT):
                    done[j] = {int(q): (np.array(block["eps"]),
                                        {0: np.array(block["p0"]),
                                         180: np.array(block["p180"])})
                               for q, block in payload["spectra"].items()}
                    norm_devs.append(payload.get("norm_dev", 0.0))
                    continue
            jobs.append((setup, j, float(tau)))

        def _store(j, res):
            done[j] = res["spectra"]
            norm_devs.append(res["norm_dev"])
            payload = {
                "config_hash": h,
                "format": _POINT_FORMAT,
                "tau": float(taus[j]),
                "spectra": {str(q2): {"eps": [round(float(e), 12) for e in eps_grid],
                                      "p0": [float(v) for v in sides[0]],
                                      "p180": [float(v) for v in sides[180]]}
                            for q2, (eps_grid, sides) in res["spectra"].items()},
                "norm_dev": res["norm_dev"],
                "edge_density": res["edge_density"],
            }
            with open(points_dir / f"tau_{j:02d}.json", "w") as fh:
                json.dump(payload, fh, sort_keys=True)

        if jobs:
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    for j, res in pool.map(_rabbit_point_job, jobs):
                        _store(j, res)
            else:
                for job in jobs:
                    j, res = _rabbit_point_job(job)
                    _store(j, res)
        spec_rows = []
        w0_lam = omega0_from_wavelength_nm(lam)
        hw_eff = setup.fit_halfwidth()
        for q2 in sidebands:
            center = sideband_energy(q2, setup.omega0_800, setup.e_i)
            signal = {}
            for th in THETA_LABELS:
                vals = []
                for j in range(len(taus)):
                    eps_grid, sides = done[j][q2]
                    vals.append(integrate_sideband(eps_grid, sides[th], center,
                                                   hw_eff * w0_lam))
                signal[th] = np.array(vals)
            spec = RabbitSpectrogram(lambda_nm=lam, base_order=q2, eps_center=center,
                                     taus=taus, signal=signal,
                                     integration_halfwidth=hw_eff,
                                     gamma=setup.gamma)
            fit = fit_spectrogram(spec)
            fit_rows[(lam, q2)] = fit
            for rec in molecular_delay(fit, method="tdse"):
                all_records.append(rec)
            for j, tau in enumerate(taus):
                spec_rows.append((lam, q2, tau, signal[0][j], signal[180][j]))
        spectro_path = lam_dir / "spectrograms.csv"
        with open(spectro_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda_nm", "base_order", "tau_au", "s_theta0", "s_theta180"])
            for row in spec_rows:
                writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
        files.append(str(spectro_path))
        all_norm_devs.extend(norm_devs)
    fits_payload = {
        f"{lam}_{q2}": {
            "lambda_nm": lam, "base_order": q2, "eps_center": fit.eps_center,
            "P": fit.p, "Q": fit.q, "theta_fit": fit.theta_fit,
            "residual_rel": fit.residual_rel, "flagged": fit.flagged,
            "integration_halfwidth": fit.integration_halfwidth}
        for (lam, q2), fit in sorted(fit_rows.items())}
    fits_path = stage_dir / "fits.json"
    with open(fits_path, "w") as fh:
        json.dump(fits_payload, fh, indent=2, sort_keys=True, default=str)
    files.append(str(fits_path))
    recs_path = stage_dir / "molecular_delays.json"
    all_records.sort(key=lambda x: (x.lambda_nm, x.base_order, x.theta))
    save_molecular_records(recs_path, all_records)
    files.append(str(recs_path))
    write_manifest(outdir, "rabbit", h, files, time.time() - t0,
                   {"lambdas_nm": lambdas, "sidebands": list(sidebands),
                    "max_norm_dev": max(all_norm_devs) if all_norm_devs else None})
    print(f"rabbit: {len(all_records)} molecular delay records "
          f"({len(lambdas)} wavelengths x {len(sidebands)} sidebands)")
    return EXIT_OK


def cmd_pt2(cfg: dict, outdir: Path, lambdas=None, sidebands=None) -> int:
    require_stage(outdir, "ground", cfg)
    sections = _STAGE_SECTIONS["pt2"]
    h = config_hash(cfg, sections)
    manifest = read_manifest(outdir, "pt2")
    if manifest and manifest["config_hash"] == h:
        print("pt2: up to date")
        return EXIT_OK
    t0 = time.time()
    model, gs, _ = load_ground(outdir)
    p = cfg["pt2"]
    lambdas = [float(l) for l in (lambdas or p["lambdas_nm"])]
    sidebands = tuple(int(s) for s in (sidebands or cfg["rabbit"]["sidebands"]))
    records = []
    diag = {}
    for q2 in sidebands:
        eps_sb, _ = pt2_box_for(lambdas[0], q2, -gs.energy, p["eta_scale"])
        box = max(pt2_box_for(lam, q2, -gs.energy, p["eta_scale"])[1]
                  for lam in lambdas)
        det = detector_states(model, eps_sb, r_max=box + 40.0)
        for lam in sorted(lambdas):
            res = pt2_sideband_phase(model, gs, lam, q2, eta_scale=p["eta_scale"],
                                     detectors=det)
            for th in THETA_LABELS:
                records.append(MolecularDelayRecord(
                    lambda_nm=lam, base_order=q2, eps=res.eps, theta=th,
                    phase=res.phase[th], tau_mol_as=res.tau_mol_as[th], method="pt2"))
            diag[f"{lam}_{q2}"] = {"sweep_spread_rad": res.sweep_spread,
                                   "box_half_width": res.box_half_width}
    stage_dir = outdir / "pt2"
    stage_dir.mkdir(parents=True, exist_ok=True)
    records.sort(key=lambda x: (x.lambda_nm, x.base_order, x.theta))
    recs_path = stage_dir / "molecular_delays.json"
    save_molecular_records(recs_path, records)
    diag_path = stage_dir / "diagnostics.json"
    with open(diag_path, "w") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
    write_manifest(outdir, "pt2", h, [str(recs_path), str(diag_path)],
                   time.time() - t0)
    print(f"pt2: {len(records)} molecular delay records")
    return EXIT_OK


def _combined_molecular(cfg: dict, outdir: Path) -> list:
    """TDSE records where simulated, second-order records elsewhere."""
    tdse = load_molecular_records(outdir, "rabbit")
    second = load_molecular_records(outdir, "pt2")
    tdse_lams = {r.lambda_nm for r in tdse}
    combined = list(tdse)
    combined.extend(r for r in second if r.lambda_nm not in tdse_lams)
    return combined


def cmd_analyze(cfg: dict, outdir: Path) -> int:
    for stage in ("ground", "wigner", "rabbit", "pt2"):
        require_stage(outdir, stage, cfg)
    sections = _STAGE_SECTIONS["analyze"]
    h = config_hash(cfg, sections)
    manifest = read_manifest(outdir, "analyze")
    if manifest and manifest["config_hash"] == h:
        print("analyze: up to date")
        return EXIT_OK
    t0 = time.time()
    table, wmeta = load_delay_table(outdir)
    mol = _combined_molecular(cfg, outdir)
    canonical = table.canonical_x_ref
    x_refs = sorted(set([r.x_ref for r in table.records]))
    probe = analysis.probe_table(mol, table, x_refs)
    stereo = analysis.stereo_probe_scan(probe, canonical)
    stage_dir = outdir / "analyze"
    stage_dir.mkdir(parents=True, exist_ok=True)
    files = []
    probe_path = stage_dir / "probe_delays.csv"
    with open(probe_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["base_order", "eps_ev", "lambda_nm", "theta_deg",
                         "xref_angstrom", "tau_probe_as"])
        for r in probe:
            writer.writerow([r.base_order, _fmt(r.eps * HARTREE_TO_EV), _fmt(r.lambda_nm),
                             r.theta, _fmt(r.x_ref / ANGSTROM_TO_BOHR), _fmt(r.tau_probe_as)])
    files.append(str(probe_path))
    stereo_path = stage_dir / "stereo_probe.csv"
    with open(stereo_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["base_order", "eps_ev", "lambda_nm", "xref_angstrom",
                         "dtau_probe_as", "tau_bar_probe_as", "canonical"])
        for row in stereo:
            writer.writerow([row["base_order"], _fmt(row["eps_ev"]), _fmt(row["lambda_nm"]),
                             _fmt(row["xref_angstrom"]), _fmt(row["dtau_probe_as"]),
                             _fmt(row["tau_bar_probe_as"]), int(row["canonical"])])
    files.append(str(stereo_path))

    fits = {"effective_charge": {}, "power_law": {}}
    fit_objects = {"g": {}, "p": {}}
    lambdas = sorted({r.lambda_nm for r in mol})
    for q2 in sorted({r.base_order for r in mol}):
        rows = [row for row in stereo
                if row["base_order"] == q2 and row["canonical"]]
        rows.sort(key=lambda r: r["lambda_nm"])
        if len(rows) < 4:
            continue
        lams = [row["lambda_nm"] for row in rows]
        eps = rows[0]["eps_ev"] / HARTREE_TO_EV
        if cfg["analysis"]["fit_effective_charge"]:
            gfit = analysis.fit_g(lams, [row["tau_bar_probe_as"] for row in rows], eps)
            fit_objects["g"][q2] = gfit
            fits["effective_charge"][str(q2)] = {
                "Z": gfit.parameters["Z"], "rel_error": gfit.rel_error,
                "flagged": gfit.flagged}
        if cfg["analysis"]["fit_power_law"]:
            pfit = analysis.fit_power_law(lams, [abs(row["dtau_probe_as"]) for row in rows])
            fit_objects["p"][q2] = pfit
            fits["power_law"][str(q2)] = {
                "p": pfit.parameters["p"], "amplitude": pfit.parameters["amplitude"],
                "rel_error": pfit.rel_error}
    cross = _cross_method_check(outdir)
    fits["cross_method_rad"] = cross
    fits_path = stage_dir / "fits.json"
    with open(fits_path, "w") as fh:
        json.dump(fits, fh, indent=2, sort_keys=True)
    files.append(str(fits_path))
    write_manifest(outdir, "analyze", h, files, time.time() - t0,
                   {"lambdas_nm": lambdas,
                    "mean_x_angstrom": wmeta["mean_x_angstrom"]})
    print(f"analyze: {len(probe)} probe records; fitted Z for "
          f"{len(fits['effective_charge'])} sidebands")
    return EXIT_OK


def _cross_method_check(outdir: Path) -> dict:
    tdse = {(r.lambda_nm, r.base_order, r.theta): r.phase
            for r in load_molecular_records(outdir, "rabbit")}
    out = {}
    for r in load_molecular_records(outdir, "pt2"):
        key = (r.lambda_nm, r.base_order, r.theta)
        if key in tdse:
            out[f"{r.lambda_nm}_{r.base_order}_{r.theta}"] = tdse[key] - r.phase
    return out


def cmd_tables(cfg: dict, outdir: Path) -> int:
    for stage in ("ground", "wigner", "rabbit", "pt2", "analyze"):
        require_stage(outdir, stage, cfg)
    t0 = time.time()
    table, _ = load_delay_table(outdir)
    mol = _combined_molecular(cfg, outdir)
    canonical = table.canonical_x_ref
    probe = analysis.probe_table(mol, table, sorted({r.x_ref for r in table.records}))
    g_fits = {}
    p_fits = {}
    stereo = analysis.stereo_probe_scan(probe, canonical)
    for q2 in sorted({row["base_order"] for row in stereo}):
        rows = [row for row in stereo if row["base_order"] == q2 and row["canonical"]]
        rows.sort(key=lambda r: r["lambda_nm"])
        if len(rows) < 4:
            continue
        eps = rows[0]["eps_ev"] / HARTREE_TO_EV
        lams = [row["lambda_nm"] for row in rows]
        if cfg["analysis"]["fit_effective_charge"]:
            g_fits[q2] = analysis.fit_g(lams, [row["tau_bar_probe_as"] for row in rows], eps)
        if cfg["analysis"]["fit_power_law"]:
            p_fits[q2] = analysis.fit_power_law(lams, [abs(row["dtau_probe_as"]) for row in rows])
    manifest = read_manifest(outdir, "ground")
    summary = analysis.reproduce_tables(
        outdir / "tables", manifest.get("derived", {}), table, mol, probe,
        g_fits, p_fits)
    files = [str(p) for p in sorted((outdir / "tables").glob("*.csv"))]
    files.append(str(outdir / "tables" / "summary.json"))
    write_manifest(outdir, "tables", config_hash(cfg, _STAGE_SECTIONS["tables"]),
                   files, time.time() - t0)
    n_missing = len(summary["missing_inputs"])
    print(f"tables: report bundle written ({n_missing} missing inputs)")
    return EXIT_OK


def cmd_plot(cfg: dict, outdir: Path) -> int:
    tables_dir = outdir / "tables"
    if not tables_dir.exists():
        raise DependencyError("tables")
    t0 = time.time()
    plot_dir = outdir / "plot"
    plot_dir.mkdir(parents=True, exist_ok=True)
    files = []

    def read_rows(name):
        path = tables_dir / name
        if not path.exists():
            return []
        with open(path) as fh:
            return list(csv.DictReader(fh))

    rows = read_rows("fig_wigner_scan.csv")
    if rows:
        series = []
        for theta in ("0", "180"):
            for xref in sorted({r["xref_angstrom"] for r in rows}):
                pts = [(float(r["eps_ev"]), float(r["tau_as"])) for r in rows
                       if r["theta_deg"] == theta and r["xref_angstrom"] == xref
                       and r["tau_as"] != "nan"]
                if pts:
                    pts.sort()
                    series.append((f"th{theta} xref={float(xref):+.2f}A",
                                   [p[0] for p in pts], [p[1] for p in pts]))
        path = plot_dir / "wigner_delays.svg"
        svgplot.line_plot(path, series, "photoelectron energy (eV)",
                          "tau_W (as)", "orientation-resolved Wigner delays")
        files.append(str(path))
    rows = read_rows("fig_molecular_delays.csv")
    if rows:
        series = []
        for theta in ("0", "180"):
            for lam in sorted({float(r["lambda_nm"]) for r in rows}):
                pts = sorted((float(r["eps_ev"]), float(r["tau_mol_as"])) for r in rows
                             if r["theta_deg"] == theta and float(r["lambda_nm"]) == lam)
                if pts:
                    series.append((f"th{theta} {int(lam)}nm",
                                   [p[0] for p in pts], [p[1] for p in pts]))
        path = plot_dir / "molecular_delays.svg"
        svgplot.line_plot(path, series, "sideband energy (eV)", "tau_mol (as)",
                          "orientation-resolved molecular delays")
        files.append(str(path))
    rows = read_rows("fig_probe_delays.csv")
    if rows:
        series = []
        for q2 in sorted({r["base_order"] for r in rows}, key=int):
            pts = sorted((float(r["lambda_nm"]), abs(float(r["dtau_probe_as"])))
                         for r in rows if r["base_order"] == q2 and r["canonical"] == "1")
            if pts:
                series.append((f"SB{q2}", [p[0] for p in pts], [p[1] for p in pts]))
        if series:
            path = plot_dir / "stereo_probe_loglog.svg"
            svgplot.line_plot(path, series, "probe wavelength (nm)",
                              "|dtau_probe| (as)", "stereo probe delay",
                              logx=True, logy=True)
            files.append(str(path))
    write_manifest(outdir, "plot", "n/a", files, time.time() - t0)
    print(f"plot: {len(files)} figures")
    return EXIT_OK


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moldelays",
        description="Wigner and two-color photoemission delays of a 1D "
                    "asymmetric model molecule")
    parser.add_argument("--config", metavar="PATH", help="TOML run configuration")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ground", "wigner", "rabbit", "pt2", "analyze", "tables", "plot"):
        p = sub.add_parser(name)
        if name == "ground":
            p.add_argument("--retune-a", action="store_true",
                           help="root-find the screening length to the target E_I")
        if name == "wigner":
            p.add_argument("--dump-channels", type=float, metavar="XREF_A",
                           help="also dump radial channels at this origin (Angstrom)")
        if name in ("rabbit", "pt2"):
            p.add_argument("--lambda", dest="lambdas", type=float, action="append",
                           metavar="NM", help="wavelength (repeatable)")
            p.add_argument("--sb", dest="sidebands", type=int, action="append",
                           metavar="N", help="sideband order at 800 nm (repeatable)")
        if name == "rabbit":
            p.add_argument("--workers", type=int, default=0)
            p.add_argument("--resume", action="store_true",
                           help="reuse completed delay points")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.out or cfg["output"]["dir"])
    try:
        if args.command == "ground":
            return cmd_ground(cfg, outdir, retune=args.retune_a)
        if args.command == "wigner":
            return cmd_wigner(cfg, outdir, dump_channels_xref=args.dump_channels)
        if args.command == "rabbit":
            return cmd_rabbit(cfg, outdir, lambdas=args.lambdas,
                              sidebands=args.sidebands, workers=args.workers,
                              resume=args.resume)
        if args.command == "pt2":
            return cmd_pt2(cfg, outdir, lambdas=args.lambdas, sidebands=args.sidebands)
        if args.command == "analyze":
            return cmd_analyze(cfg, outdir)
        if args.command == "tables":
            return cmd_tables(cfg, outdir)
        if args.command == "plot":
            return cmd_plot(cfg, outdir)
    except DependencyError as exc:
        print(f"dependency error: {exc}", file=sys.stderr)
        return EXIT_DEPENDENCY
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
