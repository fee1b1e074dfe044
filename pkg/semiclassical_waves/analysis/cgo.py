from typing import Dict, Optional

import numpy as np
import pandas as pd
from numpydoc_decorator import doc  # type: ignore

from .. import cgo, moments
from ..symbols import max_k_derivative_order
from ..util import check_types, value_error
from . import base_params, cgo_params
from .base import AnalysisBase


class BeamCgo(AnalysisBase):
    def __init__(
        self,
        **kwargs,
    ):
        # N.B., this class is designed to work cooperatively, and
        # so it's important that any remaining parameters are passed
        # to the superclass constructor.
        super().__init__(**kwargs)

    def _launch_state(self) -> cgo.GaussianBeamState:
        s = self._scenario
        return cgo.GaussianBeamState.launch(w0=s.w0, x0=s.x0, u0=s.u0, theta0=s.theta0)

    @check_types
    @doc(
        summary="Gaussian beam parameters along z.",
        returns="""
            A dataframe with one row per station and columns z, xc, theta, w,
            R_inv, amp2, S_axis and gouy.
        """,
    )
    def beam_path(
        self,
        z_values: base_params.z_values,
        method: cgo_params.method = cgo_params.method_default,
    ) -> pd.DataFrame:
        z = self._z_values(z_values)
        return cgo.beam_path(
            self.medium,
            self._launch_state(),
            z,
            method=method,
            tolerance=self._integrator_tolerance,
        )

    @check_types
    @doc(
        summary="Eikonal fields S, φ and |u|² of the beam on the (x, z) grid.",
    )
    def cgo_fields(
        self,
        z_values: base_params.z_values,
        method: cgo_params.method = cgo_params.method_default,
        gouy: cgo_params.gouy = False,
    ) -> cgo.EikonalFields:
        z = self._z_values(z_values)
        states = cgo.beam_states(
            self.medium,
            self._launch_state(),
            z,
            method=method,
            tolerance=self._integrator_tolerance,
        )
        return cgo.reconstruct_field(states, self.x_grid, self.medium.k0, gouy=gouy)

    @check_types
    @doc(
        summary="Intensity |u|²e^{−2φ} of the reconstructed beam at each station.",
    )
    def cgo_intensity_map(
        self,
        z_values: base_params.z_values,
        method: cgo_params.method = cgo_params.method_default,
    ) -> base_params.intensity_map:
        fields = self.cgo_fields(z_values, method=method)
        return self._intensity_map(fields.intensity, fields.z, "cgo_intensity")

    @check_types
    @doc(
        summary="Beam widths w(z) from the Gaussian beam parameters.",
        returns="Width at each axial position.",
    )
    def cgo_widths(
        self,
        z_values: base_params.z_values,
        method: cgo_params.method = cgo_params.method_default,
    ) -> np.ndarray:
        return self.beam_path(z_values, method=method)["w"].to_numpy()

    @check_types
    @doc(
        summary="""
            Boundary values of the complex wavevector on z = 0 for the
            launch profiles S0 = k0·θ0·x and φ0 = (x − x0)²/w0².
        """,
    )
    def cgo_boundary(
        self,
        symbol: Optional[base_params.symbol] = None,
    ) -> cgo.CgoBoundary:
        D = self._resolve_symbol(symbol)
        x = self.x_grid
        s = self._scenario
        return cgo.cgo_boundary_solve(
            D, x, s.k0_theta0 * x, ((x - s.x0) / s.w0) ** 2
        )

    @check_types
    @doc(
        summary="""
            Truncated complex-eikonal series and moment residual at the
            boundary nodes.
        """,
        extended_summary="""
            The even and odd series sum the directional derivatives
            [k″·∂_k]^j D′ up to j = 2·series_order + 1. The moment residual
            sums ∂_k^α D′ K_α/α! over the moments of the complex-eikonal
            ansatz up to |α| = moment_order. On the boundary the eikonal
            system holds, so all three vanish once the series reach second
            order in k″.
        """,
        returns="""
            A dataframe with columns x, even, odd and moment_eikonal, each
            series divided by the symbol scale.
        """,
    )
    def cgo_boundary_series(
        self,
        series_order: cgo_params.series_order = cgo_params.series_order_default,
        moment_order: cgo_params.moment_order = cgo_params.moment_order_default,
        symbol: Optional[base_params.symbol] = None,
    ) -> pd.DataFrame:
        if series_order < 0:
            value_error("series_order", series_order, "a non-negative order")
        if moment_order < 0:
            value_error("moment_order", moment_order, "a non-negative order")
        D = self._resolve_symbol(symbol)
        boundary = self.cgo_boundary(symbol=symbol)
        x = boundary.x_par
        points = np.stack([x, np.zeros_like(x)], -1)
        even, odd = moments.cgo_series_pair(
            D, points, boundary.k, boundary.k_imag, n_max=series_order
        )
        K = moments.cgo_moment_table(boundary.k_imag, max_order=moment_order)
        residuals = moments.dispersion_moment_residuals(
            D,
            points,
            boundary.k,
            K,
            beta_max=0,
            alpha_truncation=int(min(moment_order, max_k_derivative_order(D))),
        )
        (eikonal,) = residuals.values()
        scale = D.scale
        return pd.DataFrame(
            {
                "x": x,
                "even": np.broadcast_to(even, x.shape) / scale,
                "odd": np.broadcast_to(odd, x.shape) / scale,
                "moment_eikonal": np.broadcast_to(eikonal, x.shape) / scale,
            }
        )

    @check_types
    @doc(
        summary="""
            Finite-difference residuals of the eikonal, antieikonal and
            transport equations for the reconstructed beam.
        """,
        returns="Max and RMS norms of each residual, and the symbol scale.",
    )
    def cgo_residuals(
        self,
        z_values: base_params.z_values,
        symbol: Optional[base_params.symbol] = None,
        method: cgo_params.method = cgo_params.method_default,
    ) -> Dict[str, float]:
        D = self._resolve_symbol(symbol)
        fields = self.cgo_fields(z_values, method=method)
        return cgo.cgo_residuals(fields, D).to_dict()
