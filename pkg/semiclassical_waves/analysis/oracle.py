from typing import List

import numpy as np
import xarray as xr
from numpydoc_decorator import doc  # type: ignore

from .. import oracle
from ..util import CacheMiss, check_types
from ..wigner import SampledField, WignerGrid, profile_width
from . import base_params, oracle_params
from .base import AnalysisBase


class BeamOracle(AnalysisBase):
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
        summary="Closed-form beam width w(z) in the lens-like medium.",
        returns="Width at each axial position.",
    )
    def analytic_width(self, z_values: base_params.z_values) -> np.ndarray:
        return oracle.analytic_width(self._scenario, self._z_values(z_values))

    @check_types
    @doc(
        summary="Closed-form intensity on the transverse grid at each station.",
    )
    def analytic_intensity_map(
        self, z_values: base_params.z_values
    ) -> base_params.intensity_map:
        z = self._z_values(z_values)
        values = oracle.analytic_intensity(
            self._scenario, self.x_grid[:, np.newaxis], z[np.newaxis, :]
        )
        return self._intensity_map(values, z, "analytic_intensity")

    @check_types
    @doc(
        summary="""
            Closed-form Wigner function of the beam at one axial position,
            on the transverse grid and a wavevector grid centred on the
            launch direction.
        """,
    )
    def oscillator_wigner_grid(
        self,
        z: base_params.z,
        n_k: base_params.n_k = base_params.n_k_default,
    ) -> WignerGrid:
        x = self.x_grid
        dx = x[1] - x[0]
        dk = 2 * np.pi / (2 * len(x) * dx)
        shift = int(round(self._scenario.k0_theta0 / dk))
        k = (np.arange(n_k) - n_k // 2 + shift) * dk
        values = oracle.oscillator_wigner(
            self._scenario, x[:, np.newaxis], k[np.newaxis, :], z
        )
        return WignerGrid(
            values=values, x_origin=x[0], dx=dx, k_origin=k[0], dk=dk
        )

    @check_types
    @doc(
        summary="Launch field sampled on the transverse grid.",
    )
    def launch_field(self) -> SampledField:
        return self._scenario.launch_field(self.x_grid)

    def _split_step_fields(self, z, steps_per_length) -> List[SampledField]:
        length = self.medium.L if not self.medium.homogeneous else self._scenario.zR
        with self._spinner("Split-step propagation"):
            return oracle.split_step_stations(
                self.launch_field(),
                self.medium,
                list(z),
                dz=length / steps_per_length,
            )

    @check_types
    @doc(
        summary="Intensity from the split-step paraxial solver at each station.",
    )
    def split_step_intensity_map(
        self,
        z_values: base_params.z_values,
        steps_per_length: oracle_params.steps_per_length = oracle_params.steps_per_length_default,
    ) -> base_params.intensity_map:
        # Change this name if you ever change the behaviour of this function, to
        # invalidate any previously cached data.
        name = "split_step_intensity_map_v1"

        z = self._z_values(z_values)
        params = dict(z_values=z.tolist(), steps_per_length=steps_per_length)
        try:
            results = self.results_cache_get(name=name, params=params)
        except CacheMiss:
            fields = self._split_step_fields(z, steps_per_length)
            results = dict(intensity=np.stack([f.intensity for f in fields], axis=1))
            self.results_cache_set(name=name, params=params, results=results)
        return self._intensity_map(results["intensity"], z, "split_step_intensity")

    @check_types
    @doc(
        summary="Second-moment widths of the split-step intensity at each station.",
        returns="Width at each axial position.",
    )
    def split_step_widths(
        self,
        z_values: base_params.z_values,
        steps_per_length: oracle_params.steps_per_length = oracle_params.steps_per_length_default,
    ) -> np.ndarray:
        return map_widths(self.split_step_intensity_map(z_values, steps_per_length))


def map_widths(intensity: xr.DataArray) -> np.ndarray:
    """Second-moment width of every column of an (x, z) intensity map."""
    x = intensity["x"].values
    return np.array(
        [profile_width(x, intensity.values[:, j])[1] for j in range(intensity.shape[1])]
    )
