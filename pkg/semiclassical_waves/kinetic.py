"""Wave kinetic equation by the method of characteristics.

Rays follow dx/dτ = ∂D′/∂k, dk/dτ = −∂D′/∂x and carry the transport
factor d(log W)/dτ = 2D″. Full Wigner grids are moved by tracing every
target node backward to the launch plane (semi-Lagrangian transport).
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy.ndimage
import scipy.optimize

from .symbols import DispersionSymbol, derivatives, evaluate
from .util import (
    CharacteristicSurfaceError,
    CoverageWarning,
    EvanescentBranchError,
    InputError,
    check_types,
    deposit_gaussian,
    rk4_integrate,
    value_error,
)
from .wigner import WignerGrid, marginal_intensity

logger = logging.getLogger(__name__)

BRANCH_SIGNS = {"progressive": 1.0, "regressive": -1.0}
ROOT_TOLERANCE = 1e-10
CHARACTERISTIC_TOLERANCE = 1e-4
DEFAULT_STEPS_PER_LENGTH = 200


@dataclass(frozen=True)
class PhaseSpacePoint:
    x: Tuple[float, ...]
    k: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))
        object.__setattr__(self, "k", tuple(float(v) for v in np.atleast_1d(self.k)))
        if len(self.x) != len(self.k):
            raise InputError("Position and wavevector dimensions differ.")
        if not np.all(np.isfinite(self.x + self.k)):
            raise InputError(f"Non-finite phase-space point {self}.")

    @property
    def dim(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class Ray:
    """A traced characteristic.

    ``weights[i]`` is the W-transport factor accumulated up to sample
    ``i``; ``residuals[i]`` is D′ at that sample.
    """

    parameter: np.ndarray
    x: np.ndarray
    k: np.ndarray
    weights: np.ndarray
    residuals: np.ndarray
    branch: str = "progressive"
    parametrization: str = "tau"

    @property
    def weight(self) -> float:
        return float(self.weights[-1])

    @property
    def dispersion_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))

    def to_dataframe(self) -> pd.DataFrame:
        data: Dict[str, np.ndarray] = {self.parametrization: self.parameter}
        for i in range(self.x.shape[1]):
            data[f"x_{i}"] = self.x[:, i]
        for i in range(self.k.shape[1]):
            data[f"k_{i}"] = self.k[:, i]
        data["weight"] = self.weights
        data["residual"] = self.residuals
        return pd.DataFrame(data)


@dataclass(frozen=True)
class RayBundle:
    """Rays launched from the plane x^N = 0 for one or more branches.

    ``masses[i]`` is the phase-space measure carried by ray ``i`` at launch.
    """

    rays: Tuple[Ray, ...]
    masses: np.ndarray
    branches: Tuple[str, ...] = ("progressive",)
    surface: str = "x^N = 0"

    def __post_init__(self):
        if len(self.rays) != len(self.masses):
            raise InputError("One launch mass per ray is required.")
        if not np.all(np.isfinite(self.masses)):
            raise InputError("Ray masses must be finite.")

    def positions(self, station: int, axis: int = 0) -> np.ndarray:
        return np.array([r.x[station, axis] for r in self.rays])

    def charges(self, station: int) -> np.ndarray:
        return np.array([m * r.weights[station] for m, r in zip(self.masses, self.rays)])

    def to_dataframe(self) -> pd.DataFrame:
        frames = []
        for i, r in enumerate(self.rays):
            df = r.to_dataframe()
            df.insert(0, "ray", i)
            df.insert(1, "branch", r.branch)
            frames.append(df)
        return pd.concat(frames, ignore_index=True)


@dataclass(frozen=True)
class BoundaryData:
    """Launch data on the plane x^N = 0.

    ``k_normal[branch]`` holds the solved normal wavevector per node, NaN
    where the branch is evanescent; ``weight`` is |u0|²e^{−2φ0}.
    """

    x_par: np.ndarray
    k_par: np.ndarray
    weight: np.ndarray
    k_normal: Dict[str, np.ndarray] = field(default_factory=dict)
    branches: Tuple[str, ...] = ("progressive",)
    surface: str = "x^N = 0"

    def propagating(self, branch: str) -> np.ndarray:
        return np.isfinite(self.k_normal[branch])


def _branch_sign(branch: str) -> float:
    try:
        return BRANCH_SIGNS[branch]
    except KeyError:
        value_error("branch", branch, f"one of {sorted(BRANCH_SIGNS)}")
    return 0.0


def _assemble(k_tangent, k_normal):
    return np.concatenate([k_tangent, k_normal[..., np.newaxis]], axis=-1)


def solve_normal_many(
    D: DispersionSymbol,
    x_points: np.ndarray,
    k_tangent: np.ndarray,
    branch: str = "progressive",
    perturbation=None,
    max_iterations: int = 60,
    scan_points: int = 801,
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised normal-wavevector solve.

    Returns the roots and a status array: 0 solved, 1 evanescent,
    2 characteristic. ``perturbation(k, rows)``, if given, is added to D′;
    ``rows`` maps each wavevector to its index in `x_points`.
    """
    sign = _branch_sign(branch)
    x_points = np.atleast_2d(np.asarray(x_points, dtype=float))
    n = x_points.shape[0]
    k_tangent = np.asarray(k_tangent, dtype=float).reshape(n, D.dim - 1)
    tol = ROOT_TOLERANCE * D.scale
    slope_floor = CHARACTERISTIC_TOLERANCE * D.scale / D.k_scale
    bound = 1e6 * D.k_scale

    def residual(kn, rows):
        k = _assemble(k_tangent[rows], kn)
        value = evaluate(D, x_points[rows], k)[0]
        if perturbation is not None:
            value = value + perturbation(k, rows)
        return value

    def slope(kn, rows):
        k = _assemble(k_tangent[rows], kn)
        return derivatives(D, x_points[rows], k, order=1).gradient_k[..., -1]

    # Newton from ±k_scale; iterates that leave a generous bound are parked
    # at zero and left to the scan below.
    rows = np.arange(n)
    kn = np.full(n, sign * D.k_scale)
    alive = np.ones(n, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iterations):
            f = residual(kn, rows)
            df = slope(kn, rows)
            step = np.where(df != 0, f / df, np.inf)
            new = kn - step
            bad = ~np.isfinite(new) | (np.abs(new) > bound)
            alive &= ~bad
            kn = np.where(bad, 0.0, new)
            if np.all(~alive | (np.abs(step) <= 1e-15 * D.k_scale)):
                break
    f = residual(kn, rows)
    df = slope(kn, rows)
    ok = alive & (np.abs(f) < tol) & (sign * kn >= 0)
    roots = np.where(ok, kn, np.nan)
    status = np.where(ok & (np.abs(df) < slope_floor), 2, 0)

    # Bracketing scan for the points Newton missed.
    missed = np.flatnonzero(~ok)
    scan = sign * np.linspace(0, 4 * D.k_scale, scan_points)
    chunk = max(1, 200000 // scan_points)
    for start in range(0, missed.size, chunk):
        block = missed[start : start + chunk]
        block_rows = np.repeat(block, scan_points)
        values = residual(np.tile(scan, block.size), block_rows).reshape(
            block.size, scan_points
        )
        for i, v in zip(block, values):
            changes = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) <= 0)
            if changes.size == 0:
                status[i] = 1
                continue
            j = changes[np.argmin(np.abs(np.abs(scan[changes]) - D.k_scale))]
            one = np.array([i])
            root = scipy.optimize.brentq(
                lambda s: residual(np.array([s]), one)[0],
                min(scan[j], scan[j + 1]),
                max(scan[j], scan[j + 1]),
                xtol=1e-15 * D.k_scale,
            )
            roots[i] = root
            if abs(slope(np.array([root]), one)[0]) < slope_floor:
                status[i] = 2
    return roots, status


@check_types
def solve_dispersion_normal(
    D: DispersionSymbol,
    x_boundary,
    k_tangent,
    branch: str = "progressive",
) -> float:
    """Solve D′(x_b, k_tangent, k_N) = 0 for k_N on the selected branch.

    Newton from ±k0 with a bracketing-scan fallback.

    Raises
    ------
    EvanescentBranchError
        If the branch has no real root.
    CharacteristicSurfaceError
        If ∂D′/∂k_N nearly vanishes at the root.

    """
    x_boundary = np.atleast_1d(np.asarray(x_boundary, dtype=float))
    k_tangent = np.atleast_1d(np.asarray(k_tangent, dtype=float))
    if x_boundary.shape != (D.dim,) or k_tangent.shape != (D.dim - 1,):
        raise InputError(
            f"Expected a position of length {D.dim} and tangential wavevector "
            f"of length {D.dim - 1}."
        )
    roots, status = solve_normal_many(D, x_boundary[None], k_tangent[None], branch)
    if status[0] == 1:
        raise EvanescentBranchError(
            f"No real {branch} root at x={x_boundary}, k_tangent={k_tangent}."
        )
    if status[0] == 2:
        raise CharacteristicSurfaceError(
            f"∂D′/∂k_N vanishes at x={x_boundary}, k_tangent={k_tangent}."
        )
    return float(roots[0])


def _ray_rhs(D: DispersionSymbol, parametrization: str):
    N = D.dim

    def rhs(t, y):
        x = y[..., :N]
        k = y[..., N : 2 * N]
        d = derivatives(D, x, k, order=1)
        dx = d.gradient_k
        dk = -d.gradient_x
        if D.lossless:
            dlogw = np.zeros(y.shape[:-1])
        else:
            dlogw = 2 * evaluate(D, x, k)[1]
        out = np.concatenate([dx, dk, dlogw[..., None]], axis=-1)
        if parametrization == "z":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = out / dx[..., -1:]
        return out

    return rhs


def default_step(D: DispersionSymbol, parametrization: str, k=None, x=None) -> float:
    dz = D.length_scale / DEFAULT_STEPS_PER_LENGTH
    if parametrization == "z":
        return dz
    speed = np.max(np.abs(derivatives(D, x, k, order=1).gradient_k))
    return dz / speed if speed > 0 else dz


def trace_rays(
    D: DispersionSymbol,
    x0: np.ndarray,
    k0: np.ndarray,
    span: Tuple[float, float],
    *,
    parametrization: str = "tau",
    step: Optional[float] = None,
    tolerance: Optional[float] = 1e-9,
    stations: Optional[Sequence[float]] = None,
    branch: str = "progressive",
) -> List[Ray]:
    """Trace a batch of rays together with a shared step sequence."""
    if parametrization not in ("tau", "z"):
        value_error("parametrization", parametrization, "'tau' or 'z'")
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    k0 = np.atleast_2d(np.asarray(k0, dtype=float))
    if step is None:
        step = default_step(D, parametrization, k0, x0)
    y0 = np.concatenate([x0, k0, np.zeros((x0.shape[0], 1))], axis=-1)
    t, y = rk4_integrate(
        _ray_rhs(D, parametrization),
        y0,
        span,
        step=step,
        tolerance=tolerance,
        stations=stations,
    )
    N = D.dim
    rays = []
    for i in range(x0.shape[0]):
        xs = y[:, i, :N]
        ks = y[:, i, N : 2 * N]
        residuals = evaluate(D, xs, ks)[0]
        rays.append(
            Ray(
                parameter=t,
                x=xs,
                k=ks,
                weights=np.exp(y[:, i, -1]),
                residuals=residuals,
                branch=branch,
                parametrization=parametrization,
            )
        )
    return rays


@check_types
def trace_ray(
    D: DispersionSymbol,
    p0: PhaseSpacePoint,
    span: Tuple[float, float],
    parametrization: str = "tau",
    step: Optional[float] = None,
    tolerance: Optional[float] = 1e-9,
    stations: Optional[Union[Sequence[float], np.ndarray]] = None,
    branch: str = "progressive",
) -> Ray:
    """Integrate Hamilton's equations for D′ from `p0` with RK4.

    With ``parametrization="z"`` the last coordinate is the evolution
    parameter. The default step is L/200 in z (or its τ equivalent); with a
    `tolerance` the step is halved wherever the Richardson estimate
    exceeds it.

    Raises
    ------
    InputError
        If `p0` is off the dispersion shell.
    IntegrationError
        On step collapse or non-finite states.

    """
    if p0.dim != D.dim:
        raise InputError(f"Point dimension {p0.dim} does not match symbol.")
    value = float(evaluate(D, np.array(p0.x), np.array(p0.k))[0])
    if abs(value) > 1e-9 * D.scale:
        raise InputError(f"Start point is off the dispersion shell, D′={value!r}.")
    return trace_rays(
        D,
        np.array(p0.x),
        np.array(p0.k),
        span,
        parametrization=parametrization,
        step=step,
        tolerance=tolerance,
        stations=stations,
        branch=branch,
    )[0]


def _nodes(W: WignerGrid):
    xx, kk = np.meshgrid(W.x, W.k, indexing="ij")
    return xx.ravel(), kk.ravel()


def _interpolate(W0: WignerGrid, xf: np.ndarray, kf: np.ndarray):
    i = (xf - W0.x_origin) / W0.dx
    j = (kf - W0.k_origin) / W0.dk
    nx, nk = W0.values.shape
    inside = (i >= 0) & (i <= nx - 1) & (j >= 0) & (j <= nk - 1)
    values = scipy.ndimage.map_coordinates(
        W0.values, [np.where(inside, i, 0.0), np.where(inside, j, 0.0)], order=3
    )
    return np.where(inside, values, 0.0), int(np.count_nonzero(~inside))


def advect_wigner_stations(
    D: DispersionSymbol,
    W0: WignerGrid,
    z_stations: Sequence[float],
    step: Optional[float] = None,
    branch: str = "progressive",
) -> List[WignerGrid]:
    """Transport W0, given on the (x, kx) phase space of the plane z = 0,
    to each station by backward characteristic tracing from every node.

    For symbols independent of z one backward integration serves all
    stations.
    """
    if D.dim != 2:
        raise InputError("Wigner advection needs a symbol on (x, z; kx, kz).")
    if step is None:
        step = D.length_scale / DEFAULT_STEPS_PER_LENGTH
    z_stations = [float(z) for z in z_stations]
    if any(z < 0 for z in z_stations):
        value_error("z_stations", z_stations, "non-negative values")
    xs, ks = _nodes(W0)
    rhs = _ray_rhs(D, "z")
    autonomous = not D.depends_on_position(1)
    shape = W0.values.shape

    def start(z):
        x = np.stack([xs, np.full_like(xs, z)], -1)
        kz, status = solve_normal_many(D, x, ks[:, None], branch)
        live = status == 0
        kz = np.where(live, kz, 0.0)
        y0 = np.stack([xs, np.full_like(xs, z), ks, kz, np.zeros_like(xs)], -1)
        return y0[live], live

    results: Dict[float, WignerGrid] = {}
    if autonomous:
        y0, live = start(0.0)
        targets = sorted(set(z for z in z_stations if z > 0))
        t, y = rk4_integrate(
            rhs,
            y0,
            (0.0, -max(targets, default=0.0)),
            step=step,
            stations=[-z for z in targets],
        )
        for z, state in zip(targets, y[1:]):
            results[z] = _foot_values(W0, state, live, shape, z)
    else:
        for z in sorted(set(z for z in z_stations if z > 0)):
            y0, live = start(z)
            t, y = rk4_integrate(rhs, y0, (z, 0.0), step=step)
            results[z] = _foot_values(W0, y[-1], live, shape, z)
    return [replace(W0) if z == 0 else results[z] for z in z_stations]


def _foot_values(W0, state, live, shape, z):
    values = np.zeros(live.size)
    foot, lost = _interpolate(W0, state[:, 0], state[:, 2])
    # Backward integration accumulates minus the forward log-weight.
    values[live] = foot * np.exp(-state[:, 4])
    evanescent = int(np.count_nonzero(~live))
    if lost or evanescent:
        logger.debug(
            f"z={z!r}: {lost} foot points outside W0, {evanescent} evanescent nodes."
        )
    if lost:
        warnings.warn(
            f"{lost} of {live.size} foot points at z={z!r} fall outside the launch "
            f"grid and are taken as zero.",
            CoverageWarning,
            stacklevel=3,
        )
    return replace(W0, values=values.reshape(shape), uncovered_nodes=lost + evanescent)


@check_types
def advect_wigner(
    D: DispersionSymbol,
    W0: WignerGrid,
    z: float,
    step: Optional[float] = None,
) -> WignerGrid:
    """W(x, kx, z) = W0(Φ^{−z}(x, kx)) with cubic interpolation in W0.

    Foot points outside the W0 domain contribute zero, are counted in
    ``uncovered_nodes`` and are reported with a CoverageWarning.
    """
    return advect_wigner_stations(D, W0, [z], step=step)[0]


def boundary_data(
    D: DispersionSymbol,
    x_par: np.ndarray,
    S0: np.ndarray,
    phi0: np.ndarray,
    u0: Union[float, np.ndarray] = 1.0,
    branches: Sequence[str] = ("progressive",),
) -> BoundaryData:
    """Geometrical-optics launch data on z = 0 from boundary phase and
    envelope profiles; evanescent cells get zero weight."""
    x_par = np.asarray(x_par, dtype=float)
    k_par = np.gradient(np.asarray(S0, dtype=float), x_par, edge_order=2)
    weight = np.abs(np.broadcast_to(u0, x_par.shape)) ** 2 * np.exp(-2 * np.asarray(phi0))
    points = np.stack([x_par, np.zeros_like(x_par)], -1)
    k_normal = {}
    for branch in branches:
        roots, status = solve_normal_many(D, points, k_par[:, None], branch)
        if np.any(status == 2):
            raise CharacteristicSurfaceError(
                f"Boundary is characteristic at x={x_par[status == 2][0]!r}."
            )
        n_evanescent = int(np.count_nonzero(status == 1))
        if n_evanescent:
            logger.info(f"{n_evanescent} evanescent boundary cells on {branch} branch.")
        k_normal[branch] = roots
    return BoundaryData(
        x_par=x_par,
        k_par=k_par,
        weight=weight,
        k_normal=k_normal,
        branches=tuple(branches),
    )


def launch_rays(
    D: DispersionSymbol,
    boundary: BoundaryData,
    z_stations: Sequence[float],
    branch_share: Optional[float] = None,
    step: Optional[float] = None,
) -> List[RayBundle]:
    """One z-parametrised ray per propagating boundary node and branch."""
    if branch_share is None:
        branch_share = 1.0 / len(boundary.branches)
    dx = np.gradient(boundary.x_par)
    bundles = []
    for branch in boundary.branches:
        live = boundary.propagating(branch) & (boundary.weight > 0)
        x0 = np.stack([boundary.x_par[live], np.zeros(live.sum())], -1)
        k0 = np.stack([boundary.k_par[live], boundary.k_normal[branch][live]], -1)
        rays = trace_rays(
            D,
            x0,
            k0,
            (0.0, max(z_stations)),
            parametrization="z",
            step=step,
            tolerance=None,
            stations=z_stations,
            branch=branch,
        )
        masses = branch_share * boundary.weight[live] * dx[live]
        bundles.append(RayBundle(rays=tuple(rays), masses=masses, branches=(branch,)))
    return bundles


def launch_from_wigner(
    D: DispersionSymbol,
    W0: WignerGrid,
    z_stations: Sequence[float],
    threshold: float = 1e-8,
    n_rays: Optional[int] = None,
    random_seed: int = 42,
    branch: str = "progressive",
    branch_share: float = 1.0,
    step: Optional[float] = None,
) -> RayBundle:
    """Rays from the nodes of a launch Wigner grid, each carrying its cell's
    mass W0·dx·dk/2π. With `n_rays` the nodes are sampled with probability
    ∝ |W0| from a seeded generator."""
    xs, ks = _nodes(W0)
    w = W0.values.ravel()
    cell = W0.dx * W0.dk / (2 * np.pi)
    if n_rays is None:
        keep = np.flatnonzero(np.abs(w) > threshold * np.abs(w).max())
        masses = w[keep] * cell
    else:
        rng = np.random.default_rng(random_seed)
        p = np.abs(w) / np.abs(w).sum()
        keep = rng.choice(w.size, size=n_rays, p=p)
        masses = np.sign(w[keep]) * np.abs(w).sum() * cell / n_rays
    points = np.stack([xs[keep], np.zeros(keep.size)], -1)
    kz, status = solve_normal_many(D, points, ks[keep, None], branch)
    live = status == 0
    x0 = points[live]
    k0 = np.stack([ks[keep][live], kz[live]], -1)
    rays = trace_rays(
        D,
        x0,
        k0,
        (0.0, max(z_stations)),
        parametrization="z",
        step=step,
        tolerance=None,
        stations=z_stations,
        branch=branch,
    )
    return RayBundle(
        rays=tuple(rays), masses=branch_share * masses[live], branches=(branch,)
    )


def project_intensity(
    source: Union[WignerGrid, RayBundle, Sequence[RayBundle]],
    x_grid: Optional[np.ndarray] = None,
    station: int = -1,
    kernel_cells: float = 2.0,
) -> np.ndarray:
    """Intensity on x: the k-marginal of a Wigner grid, or the Gaussian
    kernel deposition of ray charges at `station` (kernel width
    `kernel_cells` grid cells), summed over all bundles given."""
    if isinstance(source, WignerGrid):
        return marginal_intensity(source)
    if x_grid is None:
        raise InputError("Ray projection needs an x grid.")
    bundles = [source] if isinstance(source, RayBundle) else list(source)
    x_grid = np.asarray(x_grid, dtype=float)
    dx = float(x_grid[1] - x_grid[0])
    out = np.zeros(x_grid.size)
    for bundle in bundles:
        out += deposit_gaussian(
            float(x_grid[0]),
            dx,
            x_grid.size,
            bundle.positions(station),
            bundle.charges(station),
            kernel_cells * dx,
        )
    return out
