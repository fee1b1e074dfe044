import math
import sys
from typing import Optional

import semiclassical_waves
from .analysis.comparison import BeamComparison
from .config import ScenarioConfig
from .symbols import MediumParameters
from .util import value_error


class LensLike(BeamComparison):
    """Propagates a Gaussian beam through a lens-like medium with the
    kinetic, complex geometrical optics and reference methods.

    Parameters
    ----------
    k0 : float, optional
        Vacuum wavenumber times n0.
    L : float, optional
        Lens-like length, n² = n0²(1 − (x/L)²). Give ``math.inf`` for a
        homogeneous medium.
    w0 : float, optional
        Launch width. If not given, chosen so that L/zR equals
        `L_over_zR`.
    L_over_zR : float, optional
        Ratio of the lens-like length to the Rayleigh range of the launch
        beam, used when `w0` is not given.
    x0 : float, optional
        Launch offset of the beam center.
    u0 : float, optional
        Launch amplitude.
    theta0 : float, optional
        Launch tilt of the beam axis, in radians.
    symbol : str, optional
        Built-in dispersion symbol used by the kinetic methods.
    n_x : int, optional
        Number of transverse grid points.
    x_extent : float, optional
        Half-width of the transverse grid in maximum beam widths.
    integrator_tolerance : float or None, optional
        Local error tolerance of the adaptive RK4 integration used for
        the "ode" beam path and the full-wave constraint ray. None keeps
        fixed steps.
    results_cache : str, optional
        Path to directory on local file system to save results.
    log : str or stream, optional
        File path or stream output for logging messages.
    debug : bool, optional
        Set to True to enable debug level logging.
    show_progress : bool, optional
        If True, show a progress bar during longer-running computations.

    Examples
    --------
    A beam focusing to half its width at z = πL/2:

        >>> import math
        >>> import semiclassical_waves
        >>> beam = semiclassical_waves.LensLike(k0=1000, L=1, L_over_zR=0.5)
        >>> beam.analytic_width([math.pi / 2])

    Set up caching of the longer-running computations on the local file
    system, in a directory named "results_cache":

        >>> beam = semiclassical_waves.LensLike(results_cache="results_cache")

    Lengths may be in any units, but the integrators are tuned for L of
    order one; :meth:`from_config` takes care of the conversion.

    """

    def __init__(
        self,
        k0: float = 1000.0,
        L: float = 1.0,
        w0: Optional[float] = None,
        L_over_zR: float = 0.5,
        x0: float = 0.0,
        u0: float = 1.0,
        theta0: float = 0.0,
        n0: float = 1.0,
        symbol: str = "paraxial_oscillator",
        n_x: int = 256,
        x_extent: float = 6.0,
        integrator_tolerance: Optional[float] = 1e-9,
        results_cache: Optional[str] = None,
        log=sys.stdout,
        debug: bool = False,
        show_progress: bool = True,
        tqdm_class=None,
    ):
        medium = MediumParameters(k0=k0, L=L, n0=n0)
        if w0 is None:
            if medium.homogeneous:
                value_error("w0", w0, "a launch width for a homogeneous medium")
            if not L_over_zR > 0:
                value_error("L_over_zR", L_over_zR, "a positive ratio")
            w0 = math.sqrt(2 * L / (k0 * L_over_zR))
        super().__init__(
            medium=medium,
            w0=w0,
            x0=x0,
            u0=u0,
            theta0=theta0,
            symbol=symbol,
            n_x=n_x,
            x_extent=x_extent,
            integrator_tolerance=integrator_tolerance,
            results_cache=results_cache,
            log=log,
            debug=debug,
            show_progress=show_progress,
            tqdm_class=tqdm_class,
        )

    @classmethod
    def from_config(
        cls, config: ScenarioConfig, x0_over_w0: float = 0.0, **kwargs
    ) -> "LensLike":
        """Set up a beam in internal units from a scenario file."""
        s = config.launch_scenario(x0_over_w0)
        return cls(
            k0=s.medium.k0,
            L=s.medium.L,
            n0=s.medium.n0,
            w0=s.w0,
            x0=s.x0,
            u0=s.u0,
            theta0=s.theta0,
            symbol=config.methods.symbol,
            n_x=config.grid.n_x,
            x_extent=config.grid.x_extent,
            integrator_tolerance=config.tolerances.integrator,
            **kwargs,
        )

    def __repr__(self):
        s = self._scenario
        text = (
            f"<Lens-like Gaussian beam>\n"
            f"Wavenumber k0           : {s.medium.k0!r}\n"
            f"Lens-like length L      : {s.medium.L!r}\n"
            f"Launch width w0         : {s.w0!r}\n"
            f"Launch offset x0        : {s.x0!r}\n"
            f"Launch tilt theta0      : {s.theta0!r}\n"
            f"L/zR                    : {s.L_over_zR!r}\n"
            f"Dispersion symbol       : {self._symbol_name}\n"
            f"Transverse grid         : {self._n_x} points\n"
            f"Results cache           : {self._results_cache}\n"
            f"Software version        : semiclassical_waves {semiclassical_waves.__version__}\n"
        )
        return text
