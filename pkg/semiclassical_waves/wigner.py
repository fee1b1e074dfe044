"""Discrete Wigner transform, phase-space marginals and pseudo-spectral
application of Weyl-ordered operators."""

import logging
import math
from dataclasses import dataclass, field, replace
from itertools import product
from typing import IO, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft
import scipy.signal
import xarray as xr

from .moments import MomentTable, MultiIndex
from .symbols import DispersionSymbol, evaluate, shift_symbol
from .util import (
    AliasingError,
    InputError,
    UnsupportedExtensionError,
    check_types,
    midpoint_double_sum,
    read_grid_csv,
    value_error,
    write_grid_csv,
)

logger = logging.getLogger(__name__)

DECAY_MARGIN = 0.1
DECAY_LEVEL = 1e-8
IMAG_RESIDUE = 1e-10


@dataclass(frozen=True)
class SampledField:
    """A complex field sampled on a uniform 1D or 2D grid.

    The physical field is ``values·exp(i carrier·x)``; with no carrier the
    values are the field itself. Axes flagged as periodic are exempt from
    the decay margin.
    """

    values: np.ndarray
    origin: Tuple[float, ...]
    spacing: Tuple[float, ...]
    labels: Tuple[str, ...] = ("x",)
    carrier: Optional[Tuple[float, ...]] = None
    periodic: Optional[Tuple[bool, ...]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", values)
        ndim = values.ndim
        if ndim not in (1, 2):
            value_error("values", values.shape, "a 1D or 2D array")
        for name in ("origin", "spacing", "labels"):
            if len(getattr(self, name)) != ndim:
                value_error(name, getattr(self, name), f"a tuple of length {ndim}")
        if any(not d > 0 for d in self.spacing):
            value_error("spacing", self.spacing, "positive spacings")
        if self.carrier is not None and len(self.carrier) != ndim:
            value_error("carrier", self.carrier, f"a tuple of length {ndim}")
        if self.periodic is None:
            object.__setattr__(self, "periodic", (False,) * ndim)

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    def coords(self, axis: int = 0) -> np.ndarray:
        n = self.values.shape[axis]
        return self.origin[axis] + self.spacing[axis] * np.arange(n)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def physical_values(self) -> np.ndarray:
        if self.carrier is None:
            return self.values
        phase = np.zeros(self.shape)
        for axis, c in enumerate(self.carrier):
            shape = [1] * self.ndim
            shape[axis] = -1
            phase = phase + c * self.coords(axis).reshape(shape)
        return self.values * np.exp(1j * phase)

    def with_values(self, values: np.ndarray) -> "SampledField":
        return replace(self, values=values)

    def check_decay_margin(self):
        """Raise AliasingError unless |values| < 1e−8·max within the outer
        10% of every non-periodic axis."""
        mag = np.abs(self.values)
        peak = mag.max()
        if peak == 0:
            return
        for axis in range(self.ndim):
            if self.periodic[axis]:  # type: ignore
                continue
            n = self.shape[axis]
            m = max(1, int(math.ceil(DECAY_MARGIN * n)))
            edge = np.concatenate(
                [np.take(mag, np.arange(m), axis), np.take(mag, np.arange(n - m, n), axis)],
                axis=axis,
            )
            if edge.max() >= DECAY_LEVEL * peak:
                raise AliasingError(
                    f"Field does not decay within the outer {DECAY_MARGIN:.0%} of "
                    f"axis {self.labels[axis]!r}: edge/peak = {edge.max() / peak:.3g}."
                )


def sample_field(
    values: np.ndarray,
    x: Union[np.ndarray, Sequence[np.ndarray]],
    labels: Optional[Tuple[str, ...]] = None,
    carrier: Optional[Tuple[float, ...]] = None,
    periodic: Optional[Tuple[bool, ...]] = None,
) -> SampledField:
    """Build a SampledField from coordinate arrays, checking uniformity."""
    values = np.asarray(values)
    axes = [np.asarray(x, dtype=float)] if values.ndim == 1 else list(x)
    origin, spacing = [], []
    for a in axes:
        a = np.asarray(a, dtype=float)
        if a.size < 2:
            raise InputError("Each axis needs at least two samples.")
        d = np.diff(a)
        if not np.allclose(d, d[0], rtol=1e-9, atol=0):
            raise InputError("Grid spacing is not uniform.")
        origin.append(float(a[0]))
        spacing.append(float(d.mean()))
    if labels is None:
        labels = ("x",) if values.ndim == 1 else ("x", "z")
    return SampledField(
        values=values,
        origin=tuple(origin),
        spacing=tuple(spacing),
        labels=labels,
        carrier=carrier,
        periodic=periodic,
    )


@dataclass(frozen=True)
class WignerGrid:
    """A real phase-space density sampled on a rectangular (x, k) grid.

    ``padded_count`` is the separation-coordinate sample count used by the
    transform, so that ``dk = 2π/(padded_count·dx)`` for transformed grids.
    """

    values: np.ndarray
    x_origin: float
    dx: float
    k_origin: float
    dk: float
    padded_count: Optional[int] = None
    uncovered_nodes: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            value_error("values", values.shape, "a 2D array")
        if not np.all(np.isfinite(values)):
            raise InputError("Wigner grid values must be finite.")
        if not (self.dx > 0 and self.dk > 0):
            value_error("spacing", (self.dx, self.dk), "positive spacings")

    @property
    def x(self) -> np.ndarray:
        return self.x_origin + self.dx * np.arange(self.values.shape[0])

    @property
    def k(self) -> np.ndarray:
        return self.k_origin + self.dk * np.arange(self.values.shape[1])

    def with_values(self, values: np.ndarray) -> "WignerGrid":
        return replace(self, values=values)

    def select_k(self, start: int, stop: int) -> "WignerGrid":
        """Restrict to the k-bins ``start:stop``."""
        return replace(
            self,
            values=self.values[:, start:stop],
            k_origin=self.k_origin + start * self.dk,
        )

    def to_dataarray(self) -> xr.DataArray:
        return xr.DataArray(
            self.values,
            dims=("x", "k"),
            coords=dict(x=self.x, k=self.k),
            name="wigner",
        )

    def write_csv(self, f: IO):
        nx, nk = self.values.shape
        write_grid_csv(
            f,
            self.values,
            [("x", self.x_origin, self.dx, nx), ("k", self.k_origin, self.dk, nk)],
        )

    @classmethod
    def read_csv(cls, f: IO) -> "WignerGrid":
        values, axes = read_grid_csv(f)
        (_, x0, dx, _), (_, k0, dk, _) = axes
        return cls(values=values, x_origin=x0, dx=dx, k_origin=k0, dk=dk)


@check_types
def wigner_transform(field: SampledField, padding_factor: int = 2) -> WignerGrid:
    """Discrete Wigner transform of a 1D field.

    W(x_j, k_m) = Σ_s ψ(x_j + s/2) ψ*(x_j − s/2) e^{−i k_m s} dx, with the
    separation s sampled at multiples of dx over ``padding_factor·n``
    points. Half-integer samples come from band-limited (Fourier)
    interpolation.

    Raises
    ------
    AliasingError
        If the field violates the decay margin.
    InputError
        For 2D fields.

    """
    if field.ndim != 1:
        raise InputError("Only 1D fields have a (2D) Wigner grid.")
    if padding_factor < 1:
        value_error("padding_factor", padding_factor, "an integer ≥ 1")
    field.check_decay_margin()

    psi = field.values
    n = psi.shape[0]
    dx = field.spacing[0]
    ns = padding_factor * n
    if ns % 2:
        ns += 1
    half = ns // 2

    # Samples at spacing dx/2; even indices are the original samples.
    psi_half = scipy.signal.resample(psi, 2 * n)
    padded = np.zeros(2 * n + ns, dtype=complex)
    padded[half : half + 2 * n] = psi_half

    j = np.arange(n)[:, np.newaxis]
    s = np.arange(-half, half)[np.newaxis, :]
    corr = padded[2 * j + s + half] * np.conj(padded[2 * j - s + half])
    # Pair the unmatched s = −ns/2 term with its mirror so W is real.
    corr[:, 0] = corr[:, 0].real

    spectrum = scipy.fft.fftshift(
        scipy.fft.fft(scipy.fft.ifftshift(corr, axes=1), axis=1), axes=1
    )
    spectrum *= dx

    peak = np.abs(spectrum).max()
    residue = np.abs(spectrum.imag).max()
    if peak > 0 and residue > IMAG_RESIDUE * peak:
        logger.warning(f"Wigner imaginary residue {residue / peak:.3g} of peak.")

    dk = 2 * np.pi / (ns * dx)
    carrier = field.carrier[0] if field.carrier is not None else 0.0
    return WignerGrid(
        values=spectrum.real,
        x_origin=field.origin[0],
        dx=dx,
        k_origin=-half * dk + carrier,
        dk=dk,
        padded_count=ns,
    )


def marginal_intensity(W: WignerGrid) -> np.ndarray:
    """(2π)^{−1} Σ_m W(x_j, k_m) dk."""
    return W.values.sum(axis=1) * W.dk / (2 * np.pi)


@check_types
def expectation(W: WignerGrid, A: DispersionSymbol) -> np.ndarray:
    """(2π)^{−1} Σ_m A(x_j, k_m) W(x_j, k_m) dk for a 1D symbol A."""
    if A.dim != 1:
        raise InputError("Expectation over a 1D Wigner grid needs a 1D symbol.")
    xx, kk = np.meshgrid(W.x, W.k, indexing="ij")
    a, _ = evaluate(A, xx[..., np.newaxis], kk[..., np.newaxis])
    return (a * W.values).sum(axis=1) * W.dk / (2 * np.pi)


def wave_action_density(W: WignerGrid, dispersion_omega_derivative: DispersionSymbol):
    """Wave-action density, the expectation of ∂D′/∂ω."""
    return expectation(W, dispersion_omega_derivative)


def moments_of_wigner(
    W: WignerGrid, center: Union[float, np.ndarray], max_order: int
) -> MomentTable:
    """Normalised k-moments of W about ``center(x)`` at every x_j.

    Where the marginal vanishes the moments of order ≥ 1 are NaN.
    """
    if max_order < 0:
        value_error("max_order", max_order, "a non-negative integer")
    center = np.broadcast_to(np.asarray(center, dtype=float), W.x.shape)
    mass = W.values.sum(axis=1) * W.dk
    defined = np.abs(mass) > 1e-12 * np.abs(mass).max() if mass.any() else mass != 0
    dk = W.k[np.newaxis, :] - center[:, np.newaxis]
    entries = {MultiIndex((0,)): np.ones_like(mass)}
    for order in range(1, max_order + 1):
        with np.errstate(invalid="ignore", divide="ignore"):
            k_alpha = (dk**order * W.values).sum(axis=1) * W.dk / mass
        entries[MultiIndex((order,))] = np.where(defined, k_alpha, np.nan)
    return MomentTable(dim=1, max_order=max_order, entries=entries, normalized=True)


@dataclass(frozen=True)
class TabulatedSymbol:
    """Symbol values on the half-spaced position grid of a 1D field and on
    its FFT wavenumbers: ``values[h, m]`` is the symbol at
    ``x_origin + h·dx/2`` and ``k[m]``."""

    name: str
    values: np.ndarray
    x_origin: float
    dx: float
    k: np.ndarray = field(compare=False)


def field_wavenumbers(n: int, dx: float) -> np.ndarray:
    dk = 2 * np.pi / (n * dx)
    return (np.arange(n) - n // 2) * dk


def tabulate_symbol(D: DispersionSymbol, field: SampledField) -> TabulatedSymbol:
    if D.dim != 1 or field.ndim != 1:
        raise InputError("Tabulated symbols are 1D.")
    n = field.shape[0]
    dx = field.spacing[0]
    x_half = field.origin[0] + 0.5 * dx * np.arange(2 * n - 1)
    k = field_wavenumbers(n, dx)
    xx, kk = np.meshgrid(x_half, k, indexing="ij")
    values, _ = evaluate(D, xx[..., np.newaxis], kk[..., np.newaxis])
    return TabulatedSymbol(
        name=D.name, values=values, x_origin=field.origin[0], dx=dx, k=k
    )


def _check_band_limit(field: SampledField):
    for axis in range(field.ndim):
        n = field.shape[axis]
        if n < 8:
            continue
        spectrum = np.abs(scipy.fft.fftshift(scipy.fft.fft(field.values, axis=axis), axes=axis))
        profile = spectrum.max(axis=1 - axis) if field.ndim == 2 else spectrum
        m = max(1, int(math.ceil(DECAY_MARGIN * n / 2)))
        edge = max(profile[:m].max(), profile[n - m :].max())
        if edge > DECAY_LEVEL * profile.max():
            raise AliasingError(
                f"Spectral content of the field reaches the Nyquist band along "
                f"axis {field.labels[axis]!r}."
            )


def _apply_k_power(values: np.ndarray, wavenumbers, power: Tuple[int, ...]):
    if not any(power):
        return values
    spectrum = scipy.fft.fftn(values)
    for axis, (kappa, p) in enumerate(zip(wavenumbers, power)):
        if p:
            shape = [1] * values.ndim
            shape[axis] = -1
            spectrum = spectrum * (kappa**p).reshape(shape)
    return scipy.fft.ifftn(spectrum)


@check_types
def weyl_apply(
    D: Union[DispersionSymbol, TabulatedSymbol], field: SampledField
) -> SampledField:
    """Apply the Weyl-quantised operator D̂ to a sampled field.

    Polynomial symbols use spectral derivatives with symmetric ordering of
    mixed monomials, x^a k^b → 2^{−|a|} Σ_j C(a, j) x^j k̂^b x^{a−j}.
    Tabulated symbols use the midpoint double sum. A field carrier is
    handled by shifting the symbol, so the result carries the same carrier.

    Raises
    ------
    AliasingError
        On decay-margin violations or spectral content at the Nyquist band.

    """
    field.check_decay_margin()
    _check_band_limit(field)

    if isinstance(D, TabulatedSymbol):
        if field.ndim != 1 or field.carrier is not None:
            raise InputError("Tabulated symbols apply to 1D fields without carrier.")
        n = field.shape[0]
        if D.values.shape[0] != 2 * n - 1:
            raise InputError("Tabulated symbol does not match the field grid.")
        dx = field.spacing[0]
        dk = 2 * np.pi / (n * dx)
        d = np.arange(-(n - 1), n)
        phases = np.exp(1j * np.outer(d * dx, D.k))
        out = midpoint_double_sum(
            field.values.astype(np.complex128), D.values.astype(np.complex128), phases
        )
        return field.with_values(out * dx * dk / (2 * np.pi))

    if not D.is_polynomial:
        raise UnsupportedExtensionError(
            f"Symbol {D.name!r} must be polynomial in k or tabulated."
        )
    if D.dim != field.ndim:
        raise InputError(f"Symbol dimension {D.dim} does not match field.")
    if field.carrier is not None:
        D = shift_symbol(D, field.carrier)
    for axis in range(field.ndim):
        if field.periodic[axis] and D.depends_on_position(axis):  # type: ignore
            raise InputError(
                f"Symbol depends on the periodic coordinate {field.labels[axis]!r}."
            )

    coords = np.meshgrid(*[field.coords(a) for a in range(field.ndim)], indexing="ij")
    wavenumbers = [
        2 * np.pi * scipy.fft.fftfreq(field.shape[a], field.spacing[a])
        for a in range(field.ndim)
    ]
    psi = field.values

    def x_power(power):
        out = np.ones(psi.shape)
        for c, p in zip(coords, power):
            if p:
                out = out * c**p
        return out

    result = np.zeros(psi.shape, dtype=complex)
    for (a, b), c in D.monomials:  # type: ignore
        weight = 2.0 ** -sum(a)
        for j in product(*[range(p + 1) for p in a]):
            binom = np.prod([math.comb(p, q) for p, q in zip(a, j)])
            rest = tuple(p - q for p, q in zip(a, j))
            inner = _apply_k_power(x_power(rest) * psi, wavenumbers, b)
            result += c * weight * binom * x_power(j) * inner
    return field.with_values(result)


def weyl_residual(
    D: Union[DispersionSymbol, TabulatedSymbol],
    field: SampledField,
    scale: Optional[float] = None,
) -> float:
    """‖D̂ψ‖ / (scale·‖ψ‖), with scale defaulting to the symbol magnitude."""
    if scale is None:
        scale = D.scale if isinstance(D, DispersionSymbol) else 1.0
    applied = weyl_apply(D, field)
    return float(np.linalg.norm(applied.values) / np.linalg.norm(field.values) / scale)


def profile_width(x: np.ndarray, intensity: np.ndarray) -> Tuple[float, float]:
    """Centroid and second-moment width 2·sqrt(variance) of a 1D profile."""
    mass = np.sum(intensity)
    if mass <= 0:
        value_error("intensity", "non-positive total", "a positive profile")
    centroid = np.sum(x * intensity) / mass
    variance = np.sum((x - centroid) ** 2 * intensity) / mass
    return float(centroid), float(2 * np.sqrt(variance))


def beam_width(field: SampledField) -> float:
    if field.ndim != 1:
        raise InputError("beam_width needs a 1D field.")
    return profile_width(field.coords(0), field.intensity)[1]
