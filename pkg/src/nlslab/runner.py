"""Experiment orchestration: simulate / diagnose / plan-exponents / scatter / sweep.

Every artifact (CSV, JSON, binary snapshot) carries the config hash, the
seed and the artifact version; no timestamps are written, so repeated runs
with the same config are bit-identical.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .config import RunConfig
from .ensemble import random_field
from .fields import Field, boundary_mass_fraction
from .models import HartreeKernel
from .morawetz import MorawetzReport, integrated_identity
from .observables import frame
from .propagation import BlowUpError, StepperConfig, TrajectoryRecord, propagate
from .scattering import scatter_verdict
from .weights import weight_fields

ARTIFACT_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_INVARIANT = 3

CSV_BASE_COLUMNS = ("t", "mass", "energy")
CSV_TAIL_COLUMNS = ("j_quad", "m_quad", "k_term", "p_term", "r_term",
                    "rate", "boundary_mass")


def build_initial(cfg: RunConfig) -> Field:
    grid = cfg.grid
    spec = cfg.initial
    if spec.kind == "random":
        return random_field(cfg.seed, grid, spec.modes, spec.amplitude)
    center = spec.center or (0.0,) * grid.n
    velocity = spec.velocity or (0.0,) * grid.n
    shifted = [np.asarray(x) - c for x, c in zip(grid.x, center)]
    phase = sum(v * x for v, x in zip(velocity, shifted))
    if spec.kind == "gaussian":
        r2 = sum(x ** 2 for x in shifted)
        vals = spec.amplitude * np.exp(-r2 / (2.0 * spec.width ** 2)) \
            * np.exp(1j * phase)
        return Field(grid, np.broadcast_to(vals, grid.shape).astype(complex))
    if spec.kind == "soliton":
        vals = spec.amplitude / np.cosh(shifted[0]) * np.exp(1j * phase)
        return Field(grid, np.broadcast_to(vals, grid.shape).astype(complex))
    raise ValueError(f"unknown initial kind {spec.kind!r}")


def _stepper(cfg: RunConfig) -> StepperConfig:
    return StepperConfig(dt=cfg.dt, t0=cfg.t0, t1=cfg.t1,
                         record_stride=cfg.record_stride,
                         blowup_threshold=cfg.blowup_threshold)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _meta_lines(cfg: RunConfig) -> list[str]:
    return [f"# config_sha256={cfg.sha256}",
            f"# seed={cfg.seed}",
            f"# artifact_version={ARTIFACT_VERSION}"]


def _meta_dict(cfg: RunConfig) -> dict:
    meta = {"config_sha256": cfg.sha256, "seed": cfg.seed,
            "artifact_version": ARTIFACT_VERSION}
    if isinstance(cfg.model, HartreeKernel) and cfg.model.family == "inverse_power":
        meta["hartree_eps"] = cfg.model.eps
    return meta


def _momentum_columns(n: int) -> tuple[str, ...]:
    return ("px", "py", "pz")[:n]


def trajectory_rows(traj: TrajectoryRecord, cfg: RunConfig) -> list[dict]:
    """Per-frame CSV rows (fixed column set) from a recorded trajectory."""
    w = weight_fields(cfg.diagnostics.weight_spec(cfg.grid.n), cfg.grid)
    from .morawetz import hartree_rate, nls_rate, quad_J, quad_M
    rows = []
    for t, u in zip(traj.times, traj.snapshots):
        fr = frame(t, u, cfg.model)
        if isinstance(cfg.model, HartreeKernel):
            K, P, R = hartree_rate(u, cfg.model, w)
        else:
            K, P, R = nls_rate(u, cfg.model, w)
        row = {"t": t, "mass": fr.mass, "energy": fr.energy}
        for name, p in zip(_momentum_columns(cfg.grid.n), fr.momentum):
            row[name] = float(p)
        row.update({
            "j_quad": quad_J(fr.rho, w),
            "m_quad": quad_M(fr.rho, fr.j, w),
            "k_term": K, "p_term": P, "r_term": R, "rate": K + P + R,
            "boundary_mass": boundary_mass_fraction(u),
        })
        rows.append(row)
    return rows


def write_csv(path: str, rows: list[dict], columns: tuple[str, ...],
              cfg: RunConfig) -> None:
    lines = _meta_lines(cfg)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, payload: dict, cfg: RunConfig) -> None:
    payload = dict(payload)
    payload["meta"] = _meta_dict(cfg)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_snapshot(u: Field, t: float, base: str, cfg: RunConfig) -> None:
    """Binary snapshot: row-major little-endian float64, interleaved re/im."""
    flat = np.ascontiguousarray(u.values).reshape(-1)
    inter = np.empty(2 * flat.size)
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    inter.astype("<f8").tofile(base + ".bin")
    sidecar = {
        "t": t, "n": u.grid.n, "N": u.grid.N, "L": u.grid.L,
        "layout": "row-major, interleaved re/im, little-endian float64",
    }
    write_json(base + ".json", sidecar, cfg)


def load_snapshot(base: str) -> tuple[Field, float]:
    with open(base + ".json", encoding="utf-8") as fh:
        side = json.load(fh)
    from .fields import GridSpec
    grid = GridSpec(n=side["n"], N=side["N"], L=side["L"])
    raw = np.fromfile(base + ".bin", dtype="<f8")
    vals = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
    return Field(grid, vals), float(side["t"])


def _csv_columns(n: int) -> tuple[str, ...]:
    return CSV_BASE_COLUMNS + _momentum_columns(n) + CSV_TAIL_COLUMNS


def _propagate_or_code(cfg: RunConfig):
    u0 = build_initial(cfg)
    try:
        traj = propagate(u0, _stepper(cfg), cfg.model)
    except BlowUpError as err:
        return None, err
    for u in traj.snapshots:
        if not np.all(np.isfinite(u.values)):
            return None, BlowUpError(traj.times[-1], float("nan"))
    return traj, None


def run_simulate(cfg: RunConfig, outdir: str) -> int:
    os.makedirs(outdir, exist_ok=True)
    traj, err = _propagate_or_code(cfg)
    if traj is None:
        write_json(os.path.join(outdir, "error.json"),
                   {"error": "blow-up", "t": err.t, "sup_norm": err.sup_norm}, cfg)
        return EXIT_NUMERIC
    rows = trajectory_rows(traj, cfg)
    write_csv(os.path.join(outdir, "observables.csv"), rows,
              _csv_columns(cfg.grid.n), cfg)
    save_snapshot(traj.snapshots[-1], traj.times[-1],
                  os.path.join(outdir, "final"), cfg)
    from .figures import simulate_figure

    # per-frame observations for the drift panel
    for row, obs in zip(rows, traj.observations):
        obs.update({"mass": row["mass"], "energy": row["energy"]})
    simulate_figure(traj, os.path.join(outdir, "simulate.png"))

    masses = [row["mass"] for row in rows]
    drift = abs(masses[-1] - masses[0]) / max(abs(masses[0]), 1e-300)
    if drift > 1e-10:
        return EXIT_INVARIANT
    return EXIT_OK


def run_diagnose(cfg: RunConfig, outdir: str) -> int:
    os.makedirs(outdir, exist_ok=True)
    traj, err = _propagate_or_code(cfg)
    if traj is None:
        write_json(os.path.join(outdir, "error.json"),
                   {"error": "blow-up", "t": err.t, "sup_norm": err.sup_norm}, cfg)
        return EXIT_NUMERIC
    w = weight_fields(cfg.diagnostics.weight_spec(cfg.grid.n), cfg.grid)
    report = integrated_identity(traj, cfg.model, w)
    rows = trajectory_rows(traj, cfg)
    write_csv(os.path.join(outdir, "morawetz.csv"), rows,
              _csv_columns(cfg.grid.n), cfg)
    write_json(os.path.join(outdir, "morawetz.json"), report.to_dict(), cfg)
    from .figures import diagnose_figure
    diagnose_figure(report, os.path.join(outdir, "diagnose.png"))

    rates = np.array([s.rate for s in report.samples])
    scale = max(float(np.trapezoid(np.abs(rates), np.array(traj.times))),
                abs(report.boundary_values[1] - report.boundary_values[0]),
                1e-12)
    if report.identity_residual / scale > cfg.diagnostics.identity_tolerance:
        return EXIT_INVARIANT
    return EXIT_OK


def run_scatter(cfg: RunConfig, outdir: str) -> int:
    os.makedirs(outdir, exist_ok=True)
    traj, err = _propagate_or_code(cfg)
    if traj is None:
        write_json(os.path.join(outdir, "error.json"),
                   {"error": "blow-up", "t": err.t, "sup_norm": err.sup_norm}, cfg)
        return EXIT_NUMERIC
    report = scatter_verdict(traj, cfg.diagnostics.scatter_threshold)
    write_json(os.path.join(outdir, "scatter.json"), report.to_dict(), cfg)
    rows = []
    for a, ia in enumerate(report.selected):
        row = {"t": report.times[ia]}
        for b, ib in enumerate(report.selected):
            row[f"d{b}"] = report.cauchy_matrix[a, b]
        rows.append(row)
    cols = ("t",) + tuple(f"d{b}" for b in range(len(report.selected)))
    write_csv(os.path.join(outdir, "cauchy.csv"), rows, cols, cfg)
    from .figures import scatter_figure
    scatter_figure(report, os.path.join(outdir, "scatter.png"))
    return EXIT_OK


def run_plan(n: int, kind: str, p=None, sigma_c=None, sigma=None,
             outdir: str = ".") -> int:
    from .exponents import PlanError, plan_hartree, plan_nls_1d, plan_nls_high_dim

    def parse_rat(v):
        return None if v is None else Fraction(v)

    try:
        p, sigma_c, sigma = parse_rat(p), parse_rat(sigma_c), parse_rat(sigma)
        if kind == "hartree":
            plan = plan_hartree(n, p=p, sigma_c=sigma_c, sigma=sigma)
        elif n == 1:
            plan = plan_nls_1d(p=p, sigma_c=sigma_c, sigma=sigma)
        else:
            plan = plan_nls_high_dim(n, p=p, sigma_c=sigma_c, sigma=sigma)
    except (PlanError, ValueError, ZeroDivisionError) as exc:
        print(f"plan-exponents: {exc}")
        return EXIT_CONFIG
    os.makedirs(outdir, exist_ok=True)
    payload = plan.to_dict()
    payload["meta"] = {"artifact_version": ARTIFACT_VERSION}
    with open(os.path.join(outdir, "plan.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK if plan.valid else EXIT_INVARIANT


def run_sweep(cfg: RunConfig, outdir: str, count: int, jobs: int = 1) -> int:
    """Seed sweep: `count` simulate runs, each in its own subdirectory."""
    os.makedirs(outdir, exist_ok=True)
    entries = []
    for i in range(count):
        sub = os.path.join(outdir, f"run_{i:03d}")
        entries.append((i, sub))

    def one(entry):
        i, sub = entry
        import copy
        sub_cfg = copy.copy(cfg)
        sub_cfg.seed_override = (cfg.seed + i) & ((1 << 64) - 1)
        return i, sub, run_simulate(sub_cfg, sub)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, entries))
    else:
        results = [one(e) for e in entries]

    index = {"runs": [{"index": i, "dir": os.path.basename(sub), "exit": code}
                      for i, sub, code in sorted(results)],
             "count": count}
    write_json(os.path.join(outdir, "index.json"), index, cfg)
    worst = max((code for _, _, code in results), default=EXIT_OK)
    return worst
