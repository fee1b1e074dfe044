"""Command-line scenario runner.

Usage::

    semiclassical-waves run focal-spots --out output/focal-spots
    semiclassical-waves check path/to/scenario.cfg

The config argument is a scenario file path or the name of a built-in
scenario. Every run writes CSV tables, PGM heatmaps and a
``summary.json`` to the output directory, in the units of the scenario
file.
"""

import json
import math
import os
import sys
from argparse import ArgumentParser
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import ScenarioConfig
from .lenslike import LensLike
from .util import (
    ConfigError,
    InputError,
    LoggingHelper,
    SemiclassicalError,
    init_filesystem,
    write_grid_csv,
)
from .wigner import WignerGrid

EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def write_heatmap(grid: np.ndarray, path: str, fs=None):
    """Write a 2D array as an 8-bit binary PGM image.

    Rows of `grid` become image rows, so an (x, z) intensity map is drawn
    with z running horizontally. Values map linearly from min → 0 to
    max → 255; a constant grid maps to 128. The value range is written to
    a sidecar ``<path>.range.txt``.
    """
    values = np.asarray(grid, dtype=float)
    if values.ndim != 2 or values.size == 0:
        raise InputError(f"Heatmap needs a non-empty 2D grid, found {values.shape}.")
    if not np.all(np.isfinite(values)):
        raise InputError("Heatmap values must be finite.")
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        pixels = np.rint((values - lo) / (hi - lo) * 255).astype(np.uint8)
    else:
        pixels = np.full(values.shape, 128, dtype=np.uint8)
    height, width = pixels.shape
    if fs is None:
        fs, path = init_filesystem(path)
    with fs.open(path, mode="wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(pixels).tobytes())
    with fs.open(path + ".range.txt", mode="w") as f:
        f.write(f"{lo:.17g} {hi:.17g}\n")


def load_config(name_or_path: str) -> ScenarioConfig:
    if os.path.exists(name_or_path):
        return ScenarioConfig.from_file(name_or_path)
    if name_or_path.endswith(".cfg"):
        raise ConfigError(f"No such scenario file {name_or_path!r}.")
    return ScenarioConfig.builtin(name_or_path)


class ScenarioRunner:
    """Executes the pipeline of one scenario and writes its artifacts."""

    def __init__(
        self, config: ScenarioConfig, log: LoggingHelper, debug: bool = False
    ):
        self.config = config
        self.norm = config.normalization
        self.fs, self.root = init_filesystem(config.output.directory)
        self.fs.makedirs(self.root, exist_ok=True)
        self._log = log
        self._debug = debug
        self.outputs: List[str] = []

    def beams(self):
        for ratio in self.config.launch.x0_over_w0:
            beam = LensLike.from_config(
                self.config,
                x0_over_w0=ratio,
                log=None,
                debug=self._debug,
                show_progress=False,
            )
            yield f"x0_{ratio:g}", beam

    def stations(self, beam: LensLike) -> np.ndarray:
        grid = self.config.grid
        return beam.z_stations(n_z=grid.n_z, periods=grid.z_periods)

    def _path(self, name: str) -> str:
        self.outputs.append(name)
        return f"{self.root}/{name}"

    def write_table(self, df: pd.DataFrame, name: str):
        with self.fs.open(self._path(name), mode="w") as f:
            df.to_csv(f, index=False, float_format="%.17g")

    def write_intensity(self, intensity, name: str):
        x = self.norm.to_user_length(intensity["x"].values)
        z = self.norm.to_user_length(intensity["z"].values)
        dz = z[1] - z[0] if len(z) > 1 else 0.0
        with self.fs.open(self._path(f"{name}.csv"), mode="w") as f:
            write_grid_csv(
                f,
                intensity.values,
                [("x", x[0], x[1] - x[0], len(x)), ("z", z[0], dz, len(z))],
            )
        if self.config.output.heatmaps:
            write_heatmap(intensity.values, self._path(f"{name}.pgm"), fs=self.fs)

    def write_wigner(self, W: WignerGrid, name: str):
        norm = self.norm
        user = replace(
            W,
            values=W.values * norm.length,
            x_origin=norm.to_user_length(W.x_origin),
            dx=norm.to_user_length(W.dx),
            k_origin=norm.to_user_wavevector(W.k_origin),
            dk=norm.to_user_wavevector(W.dk),
        )
        with self.fs.open(self._path(f"{name}.csv"), mode="w") as f:
            user.write_csv(f)

    def user_beam_path(self, df: pd.DataFrame) -> pd.DataFrame:
        df = df.copy()
        for column in ("z", "xc", "w"):
            df[column] = self.norm.to_user_length(df[column])
        df["R_inv"] = self.norm.to_user_wavevector(df["R_inv"])
        return df

    def user_rays(self, df: pd.DataFrame) -> pd.DataFrame:
        df = df.copy()
        for column in df.columns:
            if column in ("z", "tau") or column.startswith("x_"):
                df[column] = self.norm.to_user_length(df[column])
            elif column.startswith("k_"):
                df[column] = self.norm.to_user_wavevector(df[column])
        return df

    def intensity_maps(self, label: str, beam: LensLike, z: np.ndarray):
        methods = self.config.methods
        if "oracle" in methods.methods:
            self.write_intensity(
                beam.analytic_intensity_map(z), f"{label}_intensity_analytic"
            )
        if "cgo" in methods.methods:
            self.write_table(
                self.user_beam_path(beam.beam_path(z, method=methods.cgo_method)),
                f"{label}_beam_path.csv",
            )
            self.write_intensity(
                beam.cgo_intensity_map(z, method=methods.cgo_method),
                f"{label}_intensity_cgo",
            )
            truncation = self.config.truncation
            series = beam.cgo_boundary_series(
                series_order=truncation.series_order,
                moment_order=truncation.moment_order,
            )
            series["x"] = self.norm.to_user_length(series["x"])
            self.write_table(series, f"{label}_boundary_series.csv")
        if "split-step" in methods.methods:
            self.write_intensity(
                beam.split_step_intensity_map(z, methods.split_step_per_length),
                f"{label}_intensity_splitstep",
            )
        if "kinetic" in methods.methods:
            n_k = self.config.grid.n_k
            self.write_intensity(
                beam.kinetic_intensity_map(z, n_k=n_k), f"{label}_intensity_kinetic"
            )
            self.write_wigner(beam.launch_wigner(n_k=n_k), f"{label}_wigner_z0")
            quarter = math.pi * beam.medium.L / 2
            if math.isfinite(quarter):
                (W,) = beam.kinetic_wigner([quarter], n_k=n_k)
                self.write_wigner(W, f"{label}_wigner_quarter")
            bundles = beam.go_ray_bundles(
                z,
                branches=methods.branches,
                branch_share=self.config.branch_share,
            )
            rays = pd.concat([b.to_dataframe() for b in bundles], ignore_index=True)
            self.write_table(self.user_rays(rays), f"{label}_go_rays.csv")
            if methods.n_rays > 0:
                bundle = beam.ray_bundle(
                    z, n_rays=methods.n_rays, random_seed=self.config.output.seed
                )
                self.write_table(
                    self.user_rays(bundle.to_dataframe()), f"{label}_rays.csv"
                )
                self.write_intensity(
                    beam.ray_intensity_map(
                        z, n_rays=methods.n_rays, random_seed=self.config.output.seed
                    ),
                    f"{label}_intensity_rays",
                )

    def focal_spots(self, label: str, beam: LensLike, z: np.ndarray):
        intensity = beam.kinetic_intensity_map(z, n_k=self.config.grid.n_k)
        self.write_intensity(intensity, f"{label}_intensity_kinetic")
        self.write_intensity(
            beam.analytic_intensity_map(z), f"{label}_intensity_analytic"
        )
        values = intensity.values
        peak = values.max(axis=0)
        inner = (peak[1:-1] >= peak[:-2]) & (peak[1:-1] >= peak[2:])
        j = np.flatnonzero(inner) + 1
        x = intensity["x"].values
        spots = pd.DataFrame(
            {
                "z": self.norm.to_user_length(z[j]),
                "x": self.norm.to_user_length(x[np.argmax(values[:, j], axis=0)]),
                "intensity": peak[j],
            }
        )
        self.write_table(spots, f"{label}_focal_spots.csv")

    def widths(self, label: str, beam: LensLike, z: np.ndarray):
        table = beam.width_table(
            z,
            n_k=self.config.grid.n_k,
            steps_per_length=self.config.methods.split_step_per_length,
        )
        for column in table.columns:
            table[column] = self.norm.to_user_length(table[column])
        self.write_table(table, f"{label}_widths.csv")

    def run(self):
        pipeline = self.config.scenario.pipeline
        self._log.info(
            f"Scenario {self.config.scenario.name!r}, pipeline {pipeline!r}."
        )
        for label, beam in self.beams():
            z = self.stations(beam)
            self._log.debug(f"{label}: {len(z)} stations.")
            if pipeline == "intensity":
                self.intensity_maps(label, beam, z)
            elif pipeline == "focal-spots":
                self.focal_spots(label, beam, z)
            elif pipeline == "widths":
                self.widths(label, beam, z)

    def thresholds(self) -> Dict[str, float]:
        t = self.config.tolerances
        return dict(
            width_law=t.width_law,
            kinetic_analytic=t.kinetic_analytic,
            kinetic_cgo=t.kinetic_cgo,
            splitstep_analytic=t.splitstep_analytic,
            go_focus=t.go_focus,
            ray_dispersion=t.constraint,
            ray_kz=t.constraint,
        )

    def metrics(self) -> pd.DataFrame:
        frames = []
        for label, beam in self.beams():
            self._log.info(f"Acceptance metrics for {label}.")
            df = beam.acceptance_metrics(
                self.stations(beam),
                n_k=self.config.grid.n_k,
                steps_per_length=self.config.methods.split_step_per_length,
                thresholds=self.thresholds(),
            )
            df.insert(0, "launch", label)
            frames.append(df)
        metrics = pd.concat(frames, ignore_index=True)
        self.write_table(metrics, "metrics.csv")
        return metrics

    def write_summary(self, metrics: Optional[pd.DataFrame] = None):
        summary: Dict[str, object] = dict(
            scenario=self.config.scenario.name,
            pipeline=self.config.scenario.pipeline,
            ratios=self.config.ratios(),
            seed=self.config.output.seed,
        )
        if metrics is not None:
            summary["metrics"] = {
                f"{row.launch}.{row.metric}": float(row.value)
                for row in metrics.itertuples()
            }
            summary["passed"] = bool(metrics["passed"].all())
        summary["outputs"] = sorted(self.outputs + ["summary.json"])
        with self.fs.open(f"{self.root}/summary.json", mode="w") as f:
            f.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")


def _parser() -> ArgumentParser:
    p = ArgumentParser(
        prog="semiclassical-waves",
        description="Run lens-like beam scenarios and compare propagation methods.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help in (
        ("run", "execute the scenario pipeline and write its outputs"),
        ("compare", "compute and report the comparison metrics"),
        ("check", "like compare, exiting non-zero if any metric fails"),
    ):
        s = sub.add_parser(name, help=help)
        s.add_argument("config", help="scenario file or built-in scenario name")
        s.add_argument("--out", help="output directory, overrides the scenario")
        s.add_argument("--seed", type=int, help="random seed for sampled rays")
        s.add_argument(
            "--check", action="store_true", help="also run the comparison metrics"
        )
        s.add_argument("--debug", action="store_true", help="enable debug logging")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    log = LoggingHelper(name="semiclassical_waves", out=sys.stderr, debug=args.debug)
    try:
        try:
            config = load_config(args.config)
        except ConfigError as e:
            log.warning(f"Invalid scenario: {e}")
            return EXIT_CONFIG_ERROR
        config = config.with_overrides(directory=args.out, seed=args.seed)
        runner = ScenarioRunner(config, log, debug=args.debug)

        metrics = None
        try:
            if args.command == "run":
                runner.run()
            if args.command != "run" or args.check:
                metrics = runner.metrics()
        except SemiclassicalError as e:
            log.warning(f"{type(e).__name__}: {e}")
            return EXIT_CHECK_FAILED
        runner.write_summary(metrics)

        if metrics is not None:
            failed = metrics[~metrics["passed"]]
            for row in failed.itertuples():
                log.warning(
                    f"{row.launch} {row.metric}: {row.value:.3g} > {row.threshold:.3g}"
                )
            if (args.command == "check" or args.check) and len(failed):
                return EXIT_CHECK_FAILED
        log.info(f"Wrote {len(runner.outputs) + 1} files to {runner.root}.")
        return 0
    finally:
        log.close()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
