from typing import Dict, List, Optional

import numpy as np
from numpydoc_decorator import doc  # type: ignore

from .. import kinetic
from ..symbols import evaluate
from ..util import CacheMiss, check_types
from ..wigner import WignerGrid, marginal_intensity, wigner_transform
from . import base_params, kinetic_params
from .base import AnalysisBase
from .oracle import map_widths


class BeamKinetics(AnalysisBase):
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
        summary="Wigner function of the launch field on the plane z = 0.",
        extended_summary="""
            The wavevector window is centred on the launch direction k0·θ0.
        """,
    )
    def launch_wigner(
        self,
        n_k: base_params.n_k = base_params.n_k_default,
    ) -> WignerGrid:
        s = self._scenario
        W = wigner_transform(s.launch_field(self.x_grid), padding_factor=2)
        n_total = W.values.shape[1]
        n_k = min(n_k, n_total)
        shift = int(round(s.k0_theta0 / W.dk))
        start = min(max((n_total - n_k) // 2 + shift, 0), n_total - n_k)
        return W.select_k(start, start + n_k)

    @check_types
    @doc(
        summary="""
            Transport the launch Wigner function to each station by backward
            characteristic tracing.
        """,
    )
    def kinetic_wigner(
        self,
        z_values: base_params.z_values,
        n_k: base_params.n_k = base_params.n_k_default,
    ) -> List[WignerGrid]:
        z = self._z_values(z_values)
        W0 = self.launch_wigner(n_k=n_k)
        with self._spinner("Advect Wigner function"):
            grids = kinetic.advect_wigner_stations(self._symbol, W0, z)
        lost = max(W.uncovered_nodes for W in grids)
        if lost:
            self._log.debug(f"Up to {lost} uncovered nodes per station.")
        return grids

    @check_types
    @doc(
        summary="Intensity projected from the transported Wigner function.",
    )
    def kinetic_intensity_map(
        self,
        z_values: base_params.z_values,
        n_k: base_params.n_k = base_params.n_k_default,
    ) -> base_params.intensity_map:
        # Change this name if you ever change the behaviour of this function, to
        # invalidate any previously cached data.
        name = "kinetic_intensity_map_v1"

        z = self._z_values(z_values)
        params = dict(z_values=z.tolist(), n_k=n_k, symbol=self._symbol_name)
        try:
            results = self.results_cache_get(name=name, params=params)
        except CacheMiss:
            grids = self.kinetic_wigner(z, n_k=n_k)
            results = dict(
                intensity=np.stack([marginal_intensity(W) for W in grids], axis=1)
            )
            self.results_cache_set(name=name, params=params, results=results)
        return self._intensity_map(results["intensity"], z, "kinetic_intensity")

    @check_types
    @doc(
        summary="Second-moment widths of the kinetic intensity at each station.",
        returns="Width at each axial position.",
    )
    def kinetic_widths(
        self,
        z_values: base_params.z_values,
        n_k: base_params.n_k = base_params.n_k_default,
    ) -> np.ndarray:
        return map_widths(self.kinetic_intensity_map(z_values, n_k=n_k))

    @check_types
    @doc(
        summary="Rays launched from the nodes of the launch Wigner function.",
    )
    def ray_bundle(
        self,
        z_values: base_params.z_values,
        n_rays: kinetic_params.n_rays = None,
        threshold: kinetic_params.threshold = kinetic_params.threshold_default,
        random_seed: base_params.random_seed = 42,
        n_k: base_params.n_k = base_params.n_k_default,
    ) -> kinetic.RayBundle:
        z = self._z_values(z_values)
        W0 = self.launch_wigner(n_k=n_k)
        with self._spinner("Trace rays"):
            return kinetic.launch_from_wigner(
                self._symbol,
                W0,
                z,
                threshold=threshold,
                n_rays=n_rays,
                random_seed=random_seed,
            )

    @check_types
    @doc(
        summary="Intensity deposited by a ray bundle at each station.",
    )
    def ray_intensity_map(
        self,
        z_values: base_params.z_values,
        n_rays: kinetic_params.n_rays = None,
        random_seed: base_params.random_seed = 42,
        kernel_cells: kinetic_params.kernel_cells = kinetic_params.kernel_cells_default,
        n_k: base_params.n_k = base_params.n_k_default,
    ) -> base_params.intensity_map:
        z = self._z_values(z_values)
        bundle = self.ray_bundle(z, n_rays=n_rays, random_seed=random_seed, n_k=n_k)
        return self._deposit([bundle], z, kernel_cells, "ray_intensity")

    @check_types
    @doc(
        summary="""
            Geometrical-optics rays launched from the boundary profiles, one
            bundle per dispersion branch.
        """,
    )
    def go_ray_bundles(
        self,
        z_values: base_params.z_values,
        branches: kinetic_params.branches = ("progressive",),
        branch_share: kinetic_params.branch_share = None,
        symbol: Optional[base_params.symbol] = None,
    ) -> List[kinetic.RayBundle]:
        z = self._z_values(z_values)
        D = self._resolve_symbol(symbol)
        x = self.x_grid
        s = self._scenario
        boundary = kinetic.boundary_data(
            D,
            x,
            s.k0_theta0 * x,
            ((x - s.x0) / s.w0) ** 2,
            u0=s.u0,
            branches=tuple(branches),
        )
        return kinetic.launch_rays(D, boundary, z, branch_share=branch_share)

    @check_types
    @doc(
        summary="Intensity deposited by geometrical-optics rays, summed over branches.",
    )
    def go_intensity_map(
        self,
        z_values: base_params.z_values,
        kernel_cells: kinetic_params.kernel_cells = kinetic_params.kernel_cells_default,
    ) -> base_params.intensity_map:
        z = self._z_values(z_values)
        bundles = self.go_ray_bundles(z)
        return self._deposit(bundles, z, kernel_cells, "go_intensity")

    def _deposit(self, bundles, z, kernel_cells, name):
        columns = [
            kinetic.project_intensity(
                bundles, self.x_grid, station=j, kernel_cells=kernel_cells
            )
            for j in range(len(z))
        ]
        return self._intensity_map(np.stack(columns, axis=1), z, name)

    @check_types
    @doc(
        summary="""
            Trace one full-wave (Helmholtz) ray from the launch offset and
            direction, and report how well it conserves the dispersion
            relation.
        """,
        parameters=dict(
            z_max="Axial distance to trace.",
        ),
        returns="""
            Maximum |D′| relative to the symbol scale, maximum relative change
            of k_z, and maximum change of the transport weight.
        """,
    )
    def ray_constraint_drift(self, z_max: float) -> Dict[str, float]:
        D = self._resolve_symbol("helmholtz_lenslike")
        s = self._scenario
        x_start = np.array([s.x0, 0.0])
        kz = kinetic.solve_dispersion_normal(D, x_start, np.array([s.k0_theta0]))
        p0 = kinetic.PhaseSpacePoint(x=tuple(x_start), k=(s.k0_theta0, kz))
        ray = kinetic.trace_ray(
            D,
            p0,
            (0.0, z_max),
            parametrization="z",
            tolerance=self._integrator_tolerance,
        )
        residuals = evaluate(D, ray.x, ray.k)[0]
        return dict(
            dispersion=float(np.max(np.abs(residuals)) / D.scale),
            kz=float(np.max(np.abs(ray.k[:, 1] - kz)) / abs(kz)),
            weight=float(np.max(np.abs(ray.weights - 1.0))),
        )
