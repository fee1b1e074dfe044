"""Complex geometrical optics for Gaussian beams.

The beam is carried by the quadratic ansatz

    S = S_axis + k0·θ·(x − xc) + k0·R_inv·(x − xc)²/2,
    φ = (x − xc)²/w²,   |u|² = amp2,

whose parameters evolve either through the lens-like ray matrix acting on
the complex beam parameter q (1/q = R_inv + 2i/(k0w²)) or through the
equivalent Riccati equation dp/dz = −p² − 1/L² for p = 1/q.
"""

import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import xarray as xr

from .kinetic import solve_normal_many
from .symbols import DispersionSymbol, MediumParameters, derivatives, evaluate
from .util import (
    CharacteristicSurfaceError,
    EvanescentBranchError,
    InputError,
    ParaxialValidityWarning,
    ResolutionError,
    check_types,
    rk4_integrate,
    value_error,
)
from .wigner import SampledField

logger = logging.getLogger(__name__)

PARAXIAL_LIMIT = 0.2
MIN_CELLS_PER_WIDTH = 8
RESIDUAL_FRAME = 0.1


@dataclass(frozen=True)
class GaussianBeamState:
    """Parameters of a Gaussian beam at axial position ``z``.

    ``amp2`` is the on-axis intensity and ``S_axis`` the phase at the beam
    centre. ``gouy`` accumulates the phase of the slowly varying amplitude,
    which is only applied to reconstructed fields on request.
    """

    z: float
    xc: float
    theta: float
    w: float
    R_inv: float
    amp2: float
    S_axis: float = 0.0
    gouy: float = 0.0

    def __post_init__(self):
        if not self.w > 0:
            value_error("w", self.w, "a positive width")
        values = (self.z, self.xc, self.theta, self.R_inv, self.amp2, self.S_axis)
        if not np.all(np.isfinite(values)):
            raise InputError(f"Non-finite beam state {self}.")

    @classmethod
    def launch(
        cls, w0: float, x0: float = 0.0, u0: float = 1.0, theta0: float = 0.0
    ) -> "GaussianBeamState":
        """A collimated beam (flat phase front) at z = 0."""
        return cls(z=0.0, xc=x0, theta=theta0, w=w0, R_inv=0.0, amp2=u0**2)

    def inverse_q(self, k0: float) -> complex:
        return complex(self.R_inv, 2 / (k0 * self.w**2))


def ray_matrix(medium: MediumParameters, dz: float) -> np.ndarray:
    """Ray transfer matrix of the lens-like medium over ``dz``."""
    if medium.homogeneous:
        return np.array([[1.0, dz], [0.0, 1.0]])
    L = medium.L
    c, s = math.cos(dz / L), math.sin(dz / L)
    return np.array([[c, L * s], [-s / L, c]])


def _check_paraxial(medium: MediumParameters, state: GaussianBeamState):
    if not medium.homogeneous and state.w > PARAXIAL_LIMIT * medium.L:
        warnings.warn(
            f"Beam width {state.w!r} is not small against L={medium.L!r}.",
            ParaxialValidityWarning,
            stacklevel=3,
        )


def _abcd(medium: MediumParameters, s0: GaussianBeamState, z: float):
    k0 = medium.k0
    dz = z - s0.z
    (A, B), (C, D) = ray_matrix(medium, dz)
    q0 = 1 / s0.inverse_q(k0)
    q = (A * q0 + B) / (C * q0 + D)
    p = 1 / q
    w = math.sqrt(2 / (k0 * p.imag))
    xc = A * s0.xc + B * s0.theta
    theta = C * s0.xc + D * s0.theta
    # Along the centre ray d(xc·θ)/dz = θ² − xc²/L², so the axial phase
    # integrates in closed form.
    S_axis = s0.S_axis + k0 * (dz + (xc * theta - s0.xc * s0.theta) / 2)
    gouy = s0.gouy - 0.5 * np.angle(A + B / q0)
    return GaussianBeamState(
        z=z,
        xc=xc,
        theta=theta,
        w=w,
        R_inv=p.real,
        amp2=s0.amp2 * s0.w / w,
        S_axis=S_axis,
        gouy=float(gouy),
    )


def _beam_rhs(medium: MediumParameters):
    k0 = medium.k0
    inv_L2 = 0.0 if medium.homogeneous else 1 / medium.L**2

    def rhs(z, y):
        xc, theta, p = y[0], y[1], y[2]
        return np.array(
            [
                theta,
                -xc * inv_L2,
                -(p**2) - inv_L2,
                -p.real,
                k0 * (1 + theta**2 / 2 - xc**2 * inv_L2 / 2),
                -0.5 * p.imag,
            ],
            dtype=complex,
        )

    return rhs


def _ode_states(
    medium: MediumParameters,
    s0: GaussianBeamState,
    z_values: Sequence[float],
    step: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> List[GaussianBeamState]:
    k0 = medium.k0
    if step is None:
        length = medium.L if not medium.homogeneous else medium.rayleigh_range(s0.w)
        step = length / 200
    y0 = np.array(
        [s0.xc, s0.theta, s0.inverse_q(k0), math.log(s0.amp2), s0.S_axis, s0.gouy],
        dtype=complex,
    )
    z_values = [float(z) for z in z_values]
    states: Dict[float, GaussianBeamState] = {}
    for sign in (1.0, -1.0):
        targets = [z for z in z_values if sign * (z - s0.z) > 0]
        if not targets:
            continue
        end = max(targets) if sign > 0 else min(targets)
        t, y = rk4_integrate(
            _beam_rhs(medium),
            y0,
            (s0.z, end),
            step=step,
            tolerance=tolerance,
            stations=targets,
        )
        for z, row in zip(t[1:], y[1:]):
            p = row[2]
            states[float(z)] = GaussianBeamState(
                z=float(z),
                xc=row[0].real,
                theta=row[1].real,
                w=math.sqrt(2 / (k0 * p.imag)),
                R_inv=p.real,
                amp2=math.exp(row[3].real),
                S_axis=row[4].real,
                gouy=row[5].real,
            )
    return [states.get(z, replace(s0)) for z in z_values]


@check_types
def propagate_beam(
    medium: MediumParameters,
    s0: GaussianBeamState,
    z_target: float,
    method: str = "abcd",
    step: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> GaussianBeamState:
    """Propagate a Gaussian beam state to ``z_target``.

    Parameters
    ----------
    medium : MediumParameters
        Lens-like (or homogeneous, L = inf) medium.
    s0 : GaussianBeamState
        Starting state.
    z_target : float
        Axial position to propagate to.
    method : {"abcd", "ode"}
        Closed-form ray matrix on the complex beam parameter, or RK4
        integration of the Riccati and envelope equations.
    step : float, optional
        RK4 step for the "ode" method, default L/200.
    tolerance : float, optional
        Local error tolerance for the "ode" method. Steps are then halved
        as needed, with `step` as the largest.

    Returns
    -------
    GaussianBeamState

    """
    _check_paraxial(medium, s0)
    if z_target == s0.z:
        return replace(s0)
    if method == "abcd":
        return _abcd(medium, s0, z_target)
    if method == "ode":
        return _ode_states(medium, s0, [z_target], step=step, tolerance=tolerance)[0]
    value_error("method", method, "'abcd' or 'ode'")
    return s0


def beam_states(
    medium: MediumParameters,
    s0: GaussianBeamState,
    z_values: Sequence[float],
    method: str = "abcd",
    step: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> List[GaussianBeamState]:
    """States at every z in `z_values`; the ODE path integrates once."""
    _check_paraxial(medium, s0)
    if method == "abcd":
        return [_abcd(medium, s0, float(z)) if z != s0.z else replace(s0) for z in z_values]
    if method == "ode":
        return _ode_states(medium, s0, z_values, step=step, tolerance=tolerance)
    value_error("method", method, "'abcd' or 'ode'")
    return []


def beam_path(
    medium: MediumParameters,
    s0: GaussianBeamState,
    z_values: Sequence[float],
    method: str = "abcd",
    tolerance: Optional[float] = None,
) -> pd.DataFrame:
    """Beam states as a table with columns z, xc, theta, w, R_inv, amp2
    (plus the axial and amplitude phases)."""
    states = beam_states(medium, s0, z_values, method=method, tolerance=tolerance)
    return pd.DataFrame(
        {
            "z": [s.z for s in states],
            "xc": [s.xc for s in states],
            "theta": [s.theta for s in states],
            "w": [s.w for s in states],
            "R_inv": [s.R_inv for s in states],
            "amp2": [s.amp2 for s in states],
            "S_axis": [s.S_axis for s in states],
            "gouy": [s.gouy for s in states],
        }
    )


@dataclass(frozen=True)
class EikonalFields:
    """S, φ and |u|² on an (x, z) grid, each array indexed ``[i_x, i_z]``."""

    x: np.ndarray
    z: np.ndarray
    S: np.ndarray
    phi: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        shape = (len(self.x), len(self.z))
        for name in ("S", "phi", "u2"):
            a = getattr(self, name)
            if a.shape != shape:
                value_error(name, a.shape, f"an array of shape {shape}")
            if not np.all(np.isfinite(a)):
                raise InputError(f"Non-finite values in {name}.")

    @property
    def intensity(self) -> np.ndarray:
        return self.u2 * np.exp(-2 * self.phi)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def slice_field(self, j: int) -> SampledField:
        """The complex transverse field ψ = u e^{−φ} e^{iS} at ``z[j]``."""
        values = np.sqrt(self.u2[:, j]) * np.exp(-self.phi[:, j] + 1j * self.S[:, j])
        return SampledField(values=values, origin=(float(self.x[0]),), spacing=(self.dx,))

    def to_field(self, k0: float) -> SampledField:
        """The 2D field on (x, z) with the axial carrier k0 factored out."""
        if len(self.z) < 2:
            raise InputError("A 2D field needs at least two z samples.")
        carrier_phase = k0 * self.z[np.newaxis, :]
        values = np.sqrt(self.u2) * np.exp(-self.phi + 1j * (self.S - carrier_phase))
        return SampledField(
            values=values,
            origin=(float(self.x[0]), float(self.z[0])),
            spacing=(self.dx, float(self.z[1] - self.z[0])),
            labels=("x", "z"),
            carrier=(0.0, k0),
        )

    def to_dataset(self) -> xr.Dataset:
        coords = dict(x=self.x, z=self.z)
        return xr.Dataset(
            {
                "S": (("x", "z"), self.S),
                "phi": (("x", "z"), self.phi),
                "u2": (("x", "z"), self.u2),
                "intensity": (("x", "z"), self.intensity),
            },
            coords=coords,
        )


def reconstruct_field(
    states: Sequence[GaussianBeamState],
    x: np.ndarray,
    k0: float,
    gouy: bool = False,
    min_cells_per_width: int = MIN_CELLS_PER_WIDTH,
) -> EikonalFields:
    """Evaluate the quadratic eikonal ansatz on an x grid at each state.

    The amplitude phase ``gouy`` is added to S only if requested.

    Raises
    ------
    ResolutionError
        If any width spans fewer than `min_cells_per_width` cells.

    """
    if not states:
        raise InputError("At least one beam state is required.")
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    w_min = min(s.w for s in states)
    if w_min / dx < min_cells_per_width:
        raise ResolutionError(
            f"Width {w_min!r} spans {w_min / dx:.3g} cells, "
            f"fewer than {min_cells_per_width}."
        )
    z, xc, theta, w, R_inv, amp2, S_axis, g = (
        np.array([getattr(s, f) for s in states]) for f in _STATE_FIELDS
    )
    d = x[:, np.newaxis] - xc[np.newaxis, :]
    phi = (d / w) ** 2
    S = S_axis + k0 * theta * d + k0 * R_inv * d**2 / 2
    if gouy:
        S = S + g
    u2 = np.broadcast_to(amp2, phi.shape).copy()
    return EikonalFields(x=x, z=z, S=S, phi=phi, u2=u2)


_STATE_FIELDS = ("z", "xc", "theta", "w", "R_inv", "amp2", "S_axis", "gouy")


@dataclass(frozen=True)
class CgoBoundary:
    """Complex wavevector k + ik″ on the plane z = 0, per boundary node."""

    x_par: np.ndarray
    k: np.ndarray
    k_imag: np.ndarray
    branch: str = "progressive"


def cgo_boundary_solve(
    D: DispersionSymbol,
    x_par: np.ndarray,
    S0: np.ndarray,
    phi0: np.ndarray,
    branch: str = "progressive",
) -> CgoBoundary:
    """Boundary values of k and k″ from the launch profiles S0, φ0.

    The tangential components are the profile gradients. The normal
    component solves D′ − ½ Σ A_ij k″_i k″_j = 0 (sum over tangential
    indices, A_ij = ∂²D′/∂k_i∂k_j) and k″_N = −Σ k″_i X_i with
    X_i = (∂D′/∂k_i)/(∂D′/∂k_N).

    Raises
    ------
    EvanescentBranchError
        If any node has no propagating root.
    CharacteristicSurfaceError
        If ∂D′/∂k_N vanishes at a root.

    """
    if D.dim != 2:
        raise InputError("Boundary solve needs a symbol on (x, z; kx, kz).")
    x_par = np.asarray(x_par, dtype=float)
    k_par = np.gradient(np.asarray(S0, dtype=float), x_par, edge_order=2)
    kpp_par = np.gradient(np.asarray(phi0, dtype=float), x_par, edge_order=2)
    points = np.stack([x_par, np.zeros_like(x_par)], -1)
    tangential = kpp_par[:, np.newaxis]

    def perturbation(k, idx):
        hessian = derivatives(D, points[idx], k, order=2).hessian_kk[..., :-1, :-1]
        t = tangential[idx]
        return -0.5 * np.einsum("...i,...ij,...j->...", t, hessian, t)

    k_normal, status = solve_normal_many(
        D, points, k_par[:, np.newaxis], branch, perturbation=perturbation
    )
    if np.any(status == 1):
        raise EvanescentBranchError(
            f"No {branch} root at x={x_par[status == 1][0]!r}."
        )
    if np.any(status == 2):
        raise CharacteristicSurfaceError(
            f"Boundary is characteristic at x={x_par[status == 2][0]!r}."
        )
    k = np.stack([k_par, k_normal], -1)
    gradient = derivatives(D, points, k, order=1).gradient_k
    X = gradient[:, 0] / gradient[:, 1]
    kpp_normal = -kpp_par * X
    return CgoBoundary(
        x_par=x_par,
        k=k,
        k_imag=np.stack([kpp_par, kpp_normal], -1),
        branch=branch,
    )


@dataclass(frozen=True)
class CgoResiduals:
    """Max and RMS norms of the eikonal, antieikonal and transport
    residuals over the grid interior, with the symbol magnitude used to
    normalise them."""

    eikonal_max: float
    eikonal_l2: float
    antieikonal_max: float
    antieikonal_l2: float
    transport_max: float
    transport_l2: float
    scale: float

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


def _norms(r: np.ndarray) -> Tuple[float, float]:
    return float(np.max(np.abs(r))), float(np.sqrt(np.mean(r**2)))


@check_types
def cgo_residuals(
    fields: EikonalFields,
    D: DispersionSymbol,
    frame: float = RESIDUAL_FRAME,
) -> CgoResiduals:
    """Finite-difference residuals of the CGO system on the grid.

    With k = ∇S and k″ = ∇φ:

    - eikonal: D′(x, k) − ½ k″_i k″_j ∂²D′/∂k_i∂k_j
    - antieikonal: k″_i ∂D′/∂k_i
    - transport: ∂_i(∂D′/∂k_i |u|²) − 2D″|u|²

    Second-order stencils are used throughout (one-sided at the edges) and
    a frame of `frame` times each axis length is excluded from the norms.
    """
    if D.dim != 2:
        raise InputError("CGO residuals need a symbol on (x, z; kx, kz).")
    if not 0 <= frame < 0.5:
        value_error("frame", frame, "a fraction in [0, 0.5)")
    x, z = fields.x, fields.z
    if len(x) < 3 or len(z) < 3:
        raise InputError("Residuals need at least three samples per axis.")
    kx, kz = np.gradient(fields.S, x, z, edge_order=2)
    ppx, ppz = np.gradient(fields.phi, x, z, edge_order=2)
    X, Z = np.meshgrid(x, z, indexing="ij")
    points = np.stack([X, Z], -1)
    k = np.stack([kx, kz], -1)
    kpp = np.stack([ppx, ppz], -1)

    d = derivatives(D, points, k, order=2)
    Dp, Dpp = evaluate(D, points, k)
    eikonal = Dp - 0.5 * np.einsum("...i,...ij,...j->...", kpp, d.hessian_kk, kpp)
    antieikonal = np.einsum("...i,...i->...", kpp, d.gradient_k)
    flux_x = d.gradient_k[..., 0] * fields.u2
    flux_z = d.gradient_k[..., 1] * fields.u2
    transport = (
        np.gradient(flux_x, x, axis=0, edge_order=2)
        + np.gradient(flux_z, z, axis=1, edge_order=2)
        - 2 * Dpp * fields.u2
    )

    mx = int(math.ceil(frame * len(x)))
    mz = int(math.ceil(frame * len(z)))
    interior = (slice(mx, len(x) - mx), slice(mz, len(z) - mz))
    e_max, e_l2 = _norms(eikonal[interior])
    a_max, a_l2 = _norms(antieikonal[interior])
    t_max, t_l2 = _norms(transport[interior])
    return CgoResiduals(
        eikonal_max=e_max,
        eikonal_l2=e_l2,
        antieikonal_max=a_max,
        antieikonal_l2=a_l2,
        transport_max=t_max,
        transport_l2=t_l2,
        scale=D.scale,
    )
