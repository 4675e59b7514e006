"""End-to-end orchestration: MD runs, binning, fitting, reporting.

Two presets are built in.  ``desk`` is sized to finish on one core in a few
minutes (500+500 particles in a 5e3 A box, 2e4 steps); ``paper`` uses the
full production setup (3e4+3e4 particles in a 5e4 A box, 1e6 steps of 5 fs,
sampled every 1000 steps).  Both walk the identical code path, only the
numbers differ.  A paper-scale run takes hours in this pure-Python engine;
it exists for completeness and is not exercised by the test suite.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import binning, fitting, md
from .fd_solver import FieldSeries
from .fields import (
    GridSpec,
    ScalarField,
    UnitScale,
    physical_to_nd_d,
    read_field_csv,
    write_field_csv,
)
from .trajectory_io import write_native


@dataclass(frozen=True)
class Preset:
    name: str
    n_he: int
    n_ar: int
    box_side: float   # A
    dt: float         # fs
    n_steps: int
    sample_stride: int
    temperature: float
    n_values: tuple[int, ...]
    d0_nd: float      # fallback initial guess when the MSD estimate is unusable
    # At desk particle counts the global-max normalization leaves the binned
    # patch level well below 1, so fitting against the idealized unit patch
    # mostly measures that offset; starting the FD model from binned frame 0
    # makes the fit measure the spreading instead.  Paper scale keeps the
    # analytic patch initialization.
    init_from_frame0: bool = False

    @property
    def unit_scale(self) -> UnitScale:
        # box maps to the unit square; time is measured in nanoseconds
        return UnitScale(box_length_cm=self.box_side * 1e-8, time_unit_s=1e-9)

    def md_config(self, seed: int) -> md.MDConfig:
        return md.MDConfig(
            n_he=self.n_he,
            n_ar=self.n_ar,
            dt=self.dt,
            temperature=self.temperature,
            seed=seed,
            sample_stride=self.sample_stride,
        )


DESK = Preset(
    name="desk",
    n_he=500,
    n_ar=500,
    box_side=5.0e3,
    dt=5.0,
    n_steps=20000,
    sample_stride=200,
    temperature=300.0,
    n_values=(10, 20),
    d0_nd=0.05,
    init_from_frame0=True,
)

PAPER = Preset(
    name="paper",
    n_he=30000,
    n_ar=30000,
    box_side=5.0e4,
    dt=5.0,
    n_steps=1000000,
    sample_stride=1000,
    temperature=300.0,
    n_values=(20, 50, 100),
    d0_nd=3.0e-3,
)

PRESETS = {"desk": DESK, "paper": PAPER}


def write_binned_dir(series: binning.BinnedSeries, out_dir: Path,
                     source: str = "") -> None:
    """Per-frame count and concentration CSVs plus a binned.json manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(series.frames):
        if frame.counts is not None:
            write_field_csv(
                ScalarField(series.grid, frame.counts.astype(np.float64)),
                out_dir / f"counts_{i:04d}.csv", time=frame.time_fs,
            )
        write_field_csv(frame.concentration, out_dir / f"u_{i:04d}.csv",
                        time=frame.time_fs)
    meta = {
        "n": series.grid.n,
        "d": series.grid.d,
        "normalization_max": series.normalization_max,
        "species": series.species.label if series.species is not None else None,
        "times_fs": [f.time_fs for f in series.frames],
        "source": source,
    }
    (out_dir / "binned.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_binned_dir(path: Path) -> binning.BinnedSeries:
    meta = json.loads((path / "binned.json").read_text(encoding="utf-8"))
    fields = []
    times = []
    for i, t_meta in enumerate(meta["times_fs"]):
        f, t = read_field_csv(path / f"u_{i:04d}.csv")
        fields.append(f)
        times.append(t if np.isfinite(t) else t_meta)
    series = binning.BinnedSeries.from_fields(times, fields)
    if meta.get("normalization_max") is not None:
        series = binning.BinnedSeries(
            grid=series.grid, frames=series.frames,
            normalization_max=int(meta["normalization_max"]),
            species=md.SPECIES_BY_LABEL.get(meta.get("species")),
        )
    return series


def write_fd_series_dir(series: FieldSeries, out_dir: Path,
                        oracle_frames=None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, (frame, t) in enumerate(zip(series.frames, series.times)):
        write_field_csv(frame, out_dir / f"frame_{i:04d}.csv", time=float(t))
    if oracle_frames is not None:
        for i, (frame, t) in enumerate(zip(oracle_frames, series.times)):
            write_field_csv(frame, out_dir / f"oracle_{i:04d}.csv", time=float(t))
    cfg = series.config
    meta = {
        "n": cfg.grid.n,
        "d": cfg.grid.d,
        "k": cfg.k,
        "diffusion": cfg.diffusion,
        "scheme": cfg.scheme.value,
        "n_max": cfg.n_max,
        "sample_stride": series.sample_stride,
        "times": [float(t) for t in series.times],
    }
    (out_dir / "series.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def fit_binned(series: binning.BinnedSeries, scale: UnitScale, d0_nd: float,
               substeps: int = 1, init_from_frame0: bool = False,
               fit_config: fitting.FitConfig | None = None) -> fitting.FitResult:
    problem = fitting.FitProblem.from_binned(
        series, scale, substeps=substeps, init_from_frame0=init_from_frame0)
    cfg = fit_config or fitting.FitConfig(d0=d0_nd)
    return fitting.lm_fit(problem, cfg)


def fit_report_dict(result: fitting.FitResult) -> dict:
    return {
        "d_opt_nd": result.d_opt_nd,
        "d_opt_cm2_s": result.d_opt_cm2_s,
        "cost": result.final_cost,
        "iterations": result.iterations,
        "ci95": result.ci95_cm2_s,
        "ci95_nd": result.ci95_nd,
        "converged": result.converged,
        "cost_trace": list(result.cost_trace),
    }


def _run_one_seed(preset: Preset, seed: int, seed_dir: Path,
                  manifest_writer=None):
    """MD run, MSD estimate, then bin+fit at every preset N."""
    box = md.SimBox(side=preset.box_side)
    cfg = preset.md_config(seed)
    traj = md.run(cfg, box, preset.n_steps)
    seed_dir.mkdir(parents=True, exist_ok=True)
    traj_path = seed_dir / "trajectory.txt"
    write_native(traj, traj_path)
    if manifest_writer:
        manifest_writer("md-run", seed_dir, {"seed": seed}, [str(traj_path)])

    msd = md.msd_diffusion_estimate(traj, md.Species.AR)
    scale = preset.unit_scale
    d0 = physical_to_nd_d(msd.diffusion_cm2_s, scale)
    if not np.isfinite(d0) or d0 <= 0:
        d0 = preset.d0_nd

    fits = {}
    for n in preset.n_values:
        grid = GridSpec(d=2, n=n)
        series = binning.bin_trajectory(traj, grid, md.Species.AR)
        bin_dir = seed_dir / f"bin_N{n}"
        write_binned_dir(series, bin_dir, source=str(traj_path))
        if manifest_writer:
            manifest_writer("bin", bin_dir, {"N": n, "seed": seed},
                            [str(bin_dir / "binned.json")])
        result = fit_binned(series, scale, d0,
                            init_from_frame0=preset.init_from_frame0)
        report = fit_report_dict(result)
        fit_dir = seed_dir / f"fit_N{n}"
        fit_dir.mkdir(parents=True, exist_ok=True)
        (fit_dir / "report.json").write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        if manifest_writer:
            manifest_writer("fit", fit_dir, {"N": n, "seed": seed, "d0": d0},
                            [str(fit_dir / "report.json")])
        fits[n] = report

    return {
        "seed": seed,
        "msd_d_cm2_s": msd.diffusion_cm2_s,
        "msd_r_squared": msd.r_squared,
        "fits": {str(n): fits[n] for n in preset.n_values},
    }


def run_reproduce(preset: Preset, seeds, n_values=None, out_dir: Path = Path("."),
                  threads: int = 1, manifest_writer=None) -> dict:
    """Full pipeline over seeds and binning resolutions.

    Writes per-seed artifacts under ``seed_<s>/``, a Table-2-shaped
    ``table.csv`` (N, mean D_opt, mean cost, mean CI) and ``report.json``
    holding the per-seed numbers that the averages came from.
    """
    if n_values is not None:
        preset = replace(preset, n_values=tuple(n_values))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    seeds = list(seeds)
    jobs = [(seed, out_dir / f"seed_{seed}") for seed in seeds]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(
                lambda sd: _run_one_seed(preset, sd[0], sd[1], manifest_writer),
                jobs))
    else:
        runs = [_run_one_seed(preset, seed, d, manifest_writer) for seed, d in jobs]

    summary = {}
    for n in preset.n_values:
        per_seed = [r["fits"][str(n)] for r in runs]
        summary[str(n)] = {
            "d_opt_cm2_s_mean": float(np.mean([f["d_opt_cm2_s"] for f in per_seed])),
            "cost_mean": float(np.mean([f["cost"] for f in per_seed])),
            "ci95_mean": float(np.mean([f["ci95"] for f in per_seed])),
        }

    report = {
        "preset": preset.name,
        "seeds": seeds,
        "n_values": list(preset.n_values),
        "runs": runs,
        "summary": summary,
    }
    (out_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    lines = ["N,d_opt_cm2_s,cost,ci95"]
    for n in preset.n_values:
        s = summary[str(n)]
        lines.append(
            f"{n},{s['d_opt_cm2_s_mean']!r},{s['cost_mean']!r},{s['ci95_mean']!r}")
    (out_dir / "table.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return report


# ---------------------------------------------------------------------------
# SVG heatmaps

_COLOR_LOW = (247, 251, 255)
_COLOR_HIGH = (8, 48, 107)
_COLOR_BINS = 16


def _bin_color(value: float) -> str:
    v = min(max(value, 0.0), 1.0)
    level = min(int(v * _COLOR_BINS), _COLOR_BINS - 1)
    frac = level / (_COLOR_BINS - 1)
    rgb = tuple(
        round(lo + frac * (hi - lo)) for lo, hi in zip(_COLOR_LOW, _COLOR_HIGH)
    )
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_heatmap_svg(field: ScalarField, cell_px: int = 8) -> str:
    """One colored rect per cell, linear 16-bin color map over [0, 1].

    Axis 0 of the field (x1) runs down the image, axis 1 (x2) runs right.
    """
    n = field.grid.n
    size = n * cell_px
    rows = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {n} {n}" shape-rendering="crispEdges">'
    ]
    values = np.atleast_2d(field.values)
    for j1 in range(values.shape[0]):
        for j2 in range(values.shape[1]):
            color = _bin_color(float(values[j1, j2]))
            rows.append(f'<rect x="{j2}" y="{j1}" width="1" height="1" fill="{color}"/>')
    rows.append("</svg>")
    return "\n".join(rows) + "\n"
