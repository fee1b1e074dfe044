import math
from typing import List, Optional

import numpy as np
import pandas as pd
from numpydoc_decorator import doc  # type: ignore

from .. import cgo, oracle
from ..util import check_types
from . import base_params, comparison_params, oracle_params
from .cgo import BeamCgo
from .kinetic import BeamKinetics
from .oracle import BeamOracle


def _l2_relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _station_linf_relative(a: np.ndarray, b: np.ndarray) -> float:
    # Per-station error relative to the station's peak.
    return float(np.max(np.max(np.abs(a - b), axis=0) / np.max(np.abs(b), axis=0)))


def _local_maxima(values: np.ndarray) -> np.ndarray:
    inner = (values[1:-1] >= values[:-2]) & (values[1:-1] >= values[2:])
    return np.flatnonzero(inner) + 1


class BeamComparison(BeamOracle, BeamCgo, BeamKinetics):
    def __init__(
        self,
        **kwargs,
    ):
        # N.B., this class is designed to work cooperatively, and
        # so it's important that any remaining parameters are passed
        # to the superclass constructor.
        super().__init__(**kwargs)

    @check_types
    @doc(
        summary="Beam widths from every method at each station.",
        returns="""
            A dataframe with columns z, w_kinetic, w_cgo, w_analytic and
            w_splitstep.
        """,
    )
    def width_table(
        self,
        z_values: base_params.z_values,
        n_k: base_params.n_k = base_params.n_k_default,
        steps_per_length: oracle_params.steps_per_length = oracle_params.steps_per_length_default,
    ) -> pd.DataFrame:
        z = self._z_values(z_values)
        return pd.DataFrame(
            {
                "z": z,
                "w_kinetic": self.kinetic_widths(z, n_k=n_k),
                "w_cgo": self.cgo_widths(z, method="ode"),
                "w_analytic": self.analytic_width(z),
                "w_splitstep": self.split_step_widths(z, steps_per_length),
            }
        )

    @check_types
    @doc(
        summary="""
            Axial positions where a focusing beam (L/zR < 1) is narrowest,
            z = (n + ½)πL, within the range of the given stations.
        """,
        returns="Focal planes, empty unless the medium focuses the beam.",
    )
    def expected_focal_planes(self, z_values: base_params.z_values) -> np.ndarray:
        z = self._z_values(z_values)
        if self.medium.homogeneous or not self._scenario.L_over_zR < 1:
            return np.array([])
        L = self.medium.L
        n = np.arange(0, math.ceil(z.max() / (math.pi * L)) + 1)
        planes = (n + 0.5) * math.pi * L
        return planes[(planes >= z.min()) & (planes <= z.max())]

    def _width_law_error(self, ratios) -> float:
        errors = []
        for ratio in ratios:
            scenario = oracle.LensLikeScenario.from_ratio(
                self.medium.k0, self.medium.L, ratio
            )
            z = np.linspace(0, 2 * math.pi * self.medium.L, 200)
            states = cgo.beam_states(
                scenario.medium,
                cgo.GaussianBeamState.launch(w0=scenario.w0),
                z,
                method="ode",
            )
            w = np.array([s.w for s in states])
            expected = oracle.analytic_width(scenario, z)
            errors.append(np.max(np.abs(w - expected) / expected))
        return float(max(errors))

    @check_types
    @doc(
        summary="""
            Compare the kinetic, complex geometrical optics, split-step and
            closed-form descriptions of the beam.
        """,
        returns="""
            A dataframe with one row per metric and columns metric, value,
            threshold and passed.
        """,
    )
    def acceptance_metrics(
        self,
        z_values: Optional[base_params.z_values] = None,
        n_k: base_params.n_k = base_params.n_k_default,
        steps_per_length: oracle_params.steps_per_length = oracle_params.steps_per_length_default,
        thresholds: comparison_params.thresholds = None,
        width_law_ratios: comparison_params.width_law_ratios = comparison_params.width_law_ratios_default,
    ) -> pd.DataFrame:
        limits = dict(comparison_params.thresholds_default)
        if thresholds is not None:
            limits.update(thresholds)
        z = self.z_stations() if z_values is None else self._z_values(z_values)
        x = self.x_grid
        dx = x[1] - x[0]
        rows: List[dict] = []

        def add(metric, value):
            rows.append(
                dict(
                    metric=metric,
                    value=value,
                    threshold=limits[metric],
                    passed=bool(value <= limits[metric]),
                )
            )

        if not self.medium.homogeneous:
            with self._spinner("Width law"):
                add("width_law", self._width_law_error(width_law_ratios))

        analytic = self.analytic_intensity_map(z).values
        kinetic = self.kinetic_intensity_map(z, n_k=n_k).values
        cgo_map = self.cgo_intensity_map(z).values
        split = self.split_step_intensity_map(z, steps_per_length).values
        add("kinetic_analytic", _station_linf_relative(kinetic, analytic))
        add("kinetic_cgo", _l2_relative(kinetic, cgo_map))
        add("splitstep_analytic", _l2_relative(split, analytic))

        planes = self.expected_focal_planes(z)
        if planes.size:
            # Diffraction limits the first focus to w0·L/zR where rays alone
            # would collapse to a point.
            w_focus = self.split_step_widths(planes[:1], steps_per_length)[0]
            predicted = self._scenario.w0 * self._scenario.L_over_zR
            add("go_focus", abs(w_focus - predicted) / predicted)

            dz = z[1] - z[0] if z.size > 1 else math.inf
            peaks = z[_local_maxima(kinetic.max(axis=0))]
            if peaks.size:
                offsets = [np.min(np.abs(peaks - p)) / dz for p in planes]
                add("focal_planes", float(max(offsets)))
            else:
                add("focal_planes", math.inf)

        center = self._scenario.center(z)
        trace = x[np.argmax(kinetic, axis=0)]
        add("center_trace", float(np.max(np.abs(trace - center)) / dx))

        drift = self.ray_constraint_drift(z_max=float(z.max()))
        add("ray_dispersion", drift["dispersion"])
        add("ray_kz", drift["kz"])
        add("ray_weight", drift["weight"])

        return pd.DataFrame(rows, columns=["metric", "value", "threshold", "passed"])
