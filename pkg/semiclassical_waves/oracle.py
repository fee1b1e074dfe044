"""Reference solutions for Gaussian beams in the lens-like medium.

Closed forms for width, intensity and the rotating Gaussian Wigner
function, and an independent split-step Fourier solver of the paraxial
equation i ∂ψ/∂z = −(1/2k0) ∂²ψ/∂x² + (k0 x²/2L²) ψ.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.fft

from .symbols import MediumParameters
from .util import (
    AliasingError,
    DomainTooSmallError,
    ResolutionError,
    check_types,
    value_error,
)
from .wigner import SampledField, beam_width

logger = logging.getLogger(__name__)

NORM_DRIFT = 1e-10
MIN_CELLS_PER_WIDTH = 16
MIN_WIDTHS_PER_DOMAIN = 8
DEFAULT_STEPS_PER_LENGTH = 400


@dataclass(frozen=True)
class LensLikeScenario:
    """A Gaussian beam u0·exp(−(x − x0)²/w0²)·exp(i k0 θ0 x) launched at
    z = 0 with its waist on the launch plane and its axis tilted by θ0."""

    medium: MediumParameters
    w0: float
    x0: float = 0.0
    u0: float = 1.0
    theta0: float = 0.0

    def __post_init__(self):
        if not self.w0 > 0:
            value_error("w0", self.w0, "a positive width")
        if not np.all(np.isfinite([self.x0, self.u0, self.theta0])):
            value_error("launch", (self.x0, self.u0, self.theta0), "finite values")

    @classmethod
    def from_ratio(
        cls,
        k0: float,
        L: float,
        L_over_zR: float,
        x0_over_w0: float = 0.0,
        u0: float = 1.0,
        theta0: float = 0.0,
    ) -> "LensLikeScenario":
        """Scenario with the waist chosen so that L/zR has the given value."""
        if not L_over_zR > 0:
            value_error("L_over_zR", L_over_zR, "a positive ratio")
        w0 = math.sqrt(2 * L / (k0 * L_over_zR))
        return cls(
            MediumParameters(k0=k0, L=L),
            w0=w0,
            x0=x0_over_w0 * w0,
            u0=u0,
            theta0=theta0,
        )

    @property
    def zR(self) -> float:
        return self.medium.rayleigh_range(self.w0)

    @property
    def L_over_zR(self) -> float:
        return self.medium.L / self.zR

    @property
    def power(self) -> float:
        """∫ intensity dx, the same at every z."""
        return self.u0**2 * self.w0 * math.sqrt(math.pi / 2)

    def launch_field(self, x: np.ndarray) -> SampledField:
        x = np.asarray(x, dtype=float)
        values = self.u0 * np.exp(-(((x - self.x0) / self.w0) ** 2))
        if self.theta0:
            values = values * np.exp(1j * self.k0_theta0 * x)
        return SampledField(
            values=values.astype(complex),
            origin=(float(x[0]),),
            spacing=(float(x[1] - x[0]),),
        )

    @property
    def k0_theta0(self) -> float:
        """Mean transverse wavevector of the launch beam."""
        return self.medium.k0 * self.theta0

    def center(self, z):
        """x0·cos(z/L) + θ0·L·sin(z/L), or x0 + θ0·z when L is infinite."""
        z = np.asarray(z, dtype=float)
        if self.medium.homogeneous:
            return self.x0 + self.theta0 * z
        L = self.medium.L
        return self.x0 * np.cos(z / L) + self.theta0 * L * np.sin(z / L)

    def center_amplitude(self) -> float:
        """Largest |center(z)| over a period; |x0| when L is infinite."""
        if self.medium.homogeneous:
            return abs(self.x0)
        return math.hypot(self.x0, self.theta0 * self.medium.L)

    def max_width(self) -> float:
        if self.medium.homogeneous:
            return math.inf
        return self.w0 * max(1.0, self.L_over_zR)


def analytic_width(scenario: LensLikeScenario, z):
    """w(z)² = [cos²(z/L) + (L/zR)² sin²(z/L)]·w0², or the free-space
    law w0²(1 + (z/zR)²) when L is infinite."""
    z = np.asarray(z, dtype=float)
    if scenario.medium.homogeneous:
        return scenario.w0 * np.sqrt(1 + (z / scenario.zR) ** 2)
    u = z / scenario.medium.L
    r = scenario.L_over_zR
    return scenario.w0 * np.sqrt(np.cos(u) ** 2 + r**2 * np.sin(u) ** 2)


def analytic_intensity(scenario: LensLikeScenario, x, z):
    """u0²·(w0/w(z))·exp(−2(x − xc(z))²/w(z)²), with xc the beam center."""
    x = np.asarray(x, dtype=float)
    w = analytic_width(scenario, z)
    xc = scenario.center(z)
    return scenario.u0**2 * (scenario.w0 / w) * np.exp(-2 * ((x - xc) / w) ** 2)


def oscillator_wigner(scenario: LensLikeScenario, x, k, z):
    """Wigner function of the beam at z: the launch Wigner function

        W0(x, k) = 2P·exp(−2(x − x0)²/w0²)·exp(−(k − k0θ0)²w0²/2),

    with P the beam power, evaluated at the phase-space point carried to
    (x, k) by the oscillator flow. Its k-marginal is
    :func:`analytic_intensity`.

    The peak value is 2P; it equals 2 only for a launch normalized to
    unit power, and is 2·u0²·w0·sqrt(π/2) in general.
    """
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    z = np.asarray(z, dtype=float)
    k0 = scenario.medium.k0
    if scenario.medium.homogeneous:
        xs = x - k * z / k0
        ks = k
    else:
        L = scenario.medium.L
        c, s = np.cos(z / L), np.sin(z / L)
        xs = x * c - (k * L / k0) * s
        ks = k * c + (k0 * x / L) * s
    w0 = scenario.w0
    return (
        2
        * scenario.power
        * np.exp(-2 * ((xs - scenario.x0) / w0) ** 2)
        * np.exp(-(((ks - scenario.k0_theta0) * w0) ** 2) / 2)
    )


def _check_grid(initial: SampledField, medium: MediumParameters, z_target: float):
    dx = initial.spacing[0]
    n = initial.shape[0]
    w = beam_width(initial)
    if w / dx < MIN_CELLS_PER_WIDTH:
        raise ResolutionError(
            f"Launch width spans {w / dx:.3g} cells, fewer than {MIN_CELLS_PER_WIDTH}."
        )
    zR = medium.rayleigh_range(w)
    if medium.homogeneous:
        w_max = w * math.sqrt(1 + (z_target / zR) ** 2)
    else:
        w_max = max(w, w * medium.L / zR)
    if n * dx < MIN_WIDTHS_PER_DOMAIN * w_max:
        raise DomainTooSmallError(
            f"Domain {n * dx!r} is narrower than {MIN_WIDTHS_PER_DOMAIN} "
            f"maximum widths ({w_max!r})."
        )


def _default_dz(medium: MediumParameters, initial: SampledField) -> float:
    if medium.homogeneous:
        return medium.rayleigh_range(beam_width(initial)) / DEFAULT_STEPS_PER_LENGTH
    return medium.L / DEFAULT_STEPS_PER_LENGTH


def split_step_stations(
    initial: SampledField,
    medium: MediumParameters,
    z_stations: Sequence[float],
    dz: Optional[float] = None,
) -> List[SampledField]:
    """Strang-split paraxial propagation, recording the field at each
    station (stations must be non-negative).

    Raises
    ------
    AliasingError
        If the norm changes by more than 1e−10 (relative) over any single
        step.

    """
    if initial.ndim != 1:
        value_error("initial", initial.shape, "a 1D field")
    z_stations = [float(z) for z in z_stations]
    if any(z < 0 for z in z_stations):
        value_error("z_stations", z_stations, "non-negative values")
    z_max = max(z_stations, default=0.0)
    _check_grid(initial, medium, z_max)
    if dz is None:
        dz = _default_dz(medium, initial)
    if not dz > 0:
        value_error("dz", dz, "a positive step")

    n = initial.shape[0]
    x = initial.coords(0)
    kx = 2 * np.pi * scipy.fft.fftfreq(n, initial.spacing[0])
    k0 = medium.k0
    potential = np.zeros(n) if medium.homogeneous else k0 * x**2 / (2 * medium.L**2)

    psi = initial.physical_values().astype(complex)
    base = SampledField(
        values=psi, origin=initial.origin, spacing=initial.spacing, labels=initial.labels
    )
    norm_prev = float(np.sum(np.abs(psi) ** 2))
    z = 0.0
    out = {}
    for target in sorted(set(z_stations)):
        while z < target:
            h = min(dz, target - z)
            if target - z - h < 1e-12 * dz:
                h = target - z
            half_kick = np.exp(-0.5j * h * potential)
            psi = half_kick * psi
            psi = scipy.fft.ifft(np.exp(-0.5j * h * kx**2 / k0) * scipy.fft.fft(psi))
            psi = half_kick * psi
            norm = float(np.sum(np.abs(psi) ** 2))
            if abs(norm - norm_prev) > NORM_DRIFT * norm_prev:
                raise AliasingError(
                    f"Norm drift {abs(norm - norm_prev) / norm_prev:.3g} in the step "
                    f"at z={z!r}."
                )
            norm_prev = norm
            z = z + h
        out[target] = base.with_values(psi.copy())
    logger.debug(f"Split-step: {len(out)} stations, dz={dz!r}.")
    return [base if s == 0 else out[s] for s in z_stations]


@check_types
def split_step_reference(
    initial: SampledField,
    medium: MediumParameters,
    z_target: float,
    dz: Optional[float] = None,
    check_convergence: bool = False,
) -> SampledField:
    """Propagate a transverse field to `z_target` with the split-step solver.

    With `check_convergence` the run is repeated at dz/2 and the relative
    L2 difference logged; the finer result is returned.
    """
    if dz is None:
        dz = _default_dz(medium, initial)
    coarse = split_step_stations(initial, medium, [z_target], dz=dz)[0]
    if not check_convergence:
        return coarse
    fine = split_step_stations(initial, medium, [z_target], dz=dz / 2)[0]
    diff = np.linalg.norm(fine.values - coarse.values) / np.linalg.norm(fine.values)
    logger.info(f"Split-step halving check at z={z_target!r}: {diff:.3g}.")
    return fine
