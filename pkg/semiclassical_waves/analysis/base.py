import math
from contextlib import nullcontext
from pathlib import Path
from typing import IO, Any, Dict, Mapping, Optional, Union

import numpy as np
import xarray as xr
import zarr  # type: ignore
from numpydoc_decorator import doc  # type: ignore
from tqdm.auto import tqdm as tqdm_auto
from yaspin import yaspin  # type: ignore

from ..oracle import LensLikeScenario
from ..symbols import DispersionSymbol, MediumParameters, builtin_symbol
from ..util import CacheMiss, LoggingHelper, check_types, hash_params, value_error
from . import base_params


class AnalysisBase:
    def __init__(
        self,
        *,
        medium: MediumParameters,
        w0: float,
        x0: float = 0.0,
        u0: float = 1.0,
        theta0: float = 0.0,
        symbol: str = "paraxial_oscillator",
        n_x: int = 256,
        x_extent: float = 6.0,
        integrator_tolerance: Optional[float] = 1e-9,
        log: Optional[Union[str, IO]] = None,
        debug: bool = False,
        show_progress: bool = False,
        results_cache: Optional[str] = None,
        tqdm_class=None,
    ):
        self._scenario = LensLikeScenario(
            medium=medium, w0=w0, x0=x0, u0=u0, theta0=theta0
        )
        self._symbol_name = symbol
        self._symbol = builtin_symbol(symbol, medium)
        if n_x < 16:
            value_error("n_x", n_x, "at least 16 grid points")
        if not x_extent > 0:
            value_error("x_extent", x_extent, "a positive number of widths")
        if integrator_tolerance is not None and not integrator_tolerance > 0:
            value_error(
                "integrator_tolerance", integrator_tolerance, "a positive tolerance"
            )
        self._n_x = n_x
        self._x_extent = x_extent
        self._integrator_tolerance = integrator_tolerance
        self._debug = debug
        self._show_progress = show_progress
        if tqdm_class is None:
            tqdm_class = tqdm_auto
        self._tqdm_class = tqdm_class

        # Set up logging.
        self._log = LoggingHelper(name=__name__, out=log, debug=debug)

        # Set up results cache directory path.
        self._results_cache: Optional[Path] = None
        if results_cache is not None:
            self._results_cache = Path(results_cache).expanduser().resolve()

    def _progress(self, iterable, desc=None, leave=False, **kwargs):  # pragma: no cover
        # Progress doesn't mix well with debug logging.
        show_progress = self._show_progress and not self._debug
        if show_progress:
            return self._tqdm_class(iterable, desc=desc, leave=leave, **kwargs)
        else:
            return iterable

    def _spinner(
        self, desc=None, spinner=None, side="right", timer=True, **kwargs
    ):  # pragma: no cover
        # Progress doesn't mix well with debug logging.
        show_progress = self._show_progress and not self._debug
        if show_progress:
            if desc:
                # For consistent behaviour with tqdm.
                desc += ":"
            return yaspin(text=desc, spinner=spinner, side=side, timer=timer, **kwargs)
        else:
            return nullcontext()

    @property
    def scenario(self) -> LensLikeScenario:
        return self._scenario

    @property
    def medium(self) -> MediumParameters:
        return self._scenario.medium

    @property
    def symbol(self) -> DispersionSymbol:
        return self._symbol

    def _resolve_symbol(self, symbol: Optional[str]) -> DispersionSymbol:
        return self._symbol if symbol is None else builtin_symbol(symbol, self.medium)

    @property
    def integrator_tolerance(self) -> Optional[float]:
        """Local error tolerance of the adaptive ray and beam integrators,
        None for fixed steps."""
        return self._integrator_tolerance

    @property
    def x_grid(self) -> np.ndarray:
        """Uniform transverse grid, periodic-style (right end excluded),
        covering `x_extent` maximum beam widths either side of the axis
        plus the largest excursion of the beam center."""
        w_max = self._scenario.max_width()
        if not math.isfinite(w_max):
            w_max = self._scenario.w0
        half = self._x_extent * w_max + self._scenario.center_amplitude()
        return -half + (2 * half / self._n_x) * np.arange(self._n_x)

    def _z_values(self, z_values: base_params.z_values) -> np.ndarray:
        z = np.asarray(z_values, dtype=float)
        if z.ndim != 1 or z.size == 0:
            value_error("z_values", z_values, "a non-empty 1D sequence")
        if np.any(z < 0):
            value_error("z_values", z_values, "non-negative axial positions")
        return z

    def _intensity_map(self, values: np.ndarray, z: np.ndarray, name: str):
        return xr.DataArray(
            values,
            dims=("x", "z"),
            coords=dict(x=self.x_grid, z=z),
            name=name,
        )

    @check_types
    @doc(
        summary="Default axial stations: `n_z` points over `periods` focusing periods.",
        parameters=dict(
            n_z="Number of stations.",
            periods="Number of periods 2πL to cover; the end point is excluded.",
        ),
    )
    def z_stations(self, n_z: int = 64, periods: float = 1.0) -> np.ndarray:
        L = self.medium.L
        if not math.isfinite(L):
            L = self._scenario.zR / (2 * math.pi)
        return np.linspace(0, 2 * math.pi * L * periods, n_z, endpoint=False)

    def _results_cache_add_analysis_params(self, params: dict):
        params["scenario"] = dict(
            k0=self.medium.k0,
            L=self.medium.L,
            w0=self._scenario.w0,
            x0=self._scenario.x0,
            u0=self._scenario.u0,
            theta0=self._scenario.theta0,
            n_x=self._n_x,
            x_extent=self._x_extent,
        )

    @check_types
    def results_cache_get(
        self, *, name: str, params: Dict[str, Any]
    ) -> Mapping[str, np.ndarray]:
        name = type(self).__name__.lower() + "_" + name
        if self._results_cache is None:
            raise CacheMiss
        params = params.copy()
        self._results_cache_add_analysis_params(params)
        cache_key, _ = hash_params(params)
        cache_path = self._results_cache / name / cache_key

        # Read zipped zarr format.
        results_path = cache_path / "results.zarr.zip"
        if results_path.exists():
            return zarr.load(results_path)

        raise CacheMiss

    @check_types
    def results_cache_set(
        self, *, name: str, params: Dict[str, Any], results: Mapping[str, np.ndarray]
    ):
        name = type(self).__name__.lower() + "_" + name
        if self._results_cache is None:
            return

        # Set up parameters for the results to be saved.
        params = params.copy()
        self._results_cache_add_analysis_params(params)
        cache_key, params_json = hash_params(params)

        # Determine storage path.
        cache_path = self._results_cache / name / cache_key
        cache_path.mkdir(exist_ok=True, parents=True)

        params_path = cache_path / "params.json"
        results_path = cache_path / "results.zarr.zip"

        with self._spinner("Save results to cache"):
            with params_path.open(mode="w") as f:
                f.write(params_json)
            zarr.save(results_path, **results)
