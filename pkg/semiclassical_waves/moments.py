"""Momentum-distribution calculus: multi-indices, moment tables, the
δ-series action on test symbols, the dispersion-moment equations and a
direct quadrature oracle."""

import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import IO, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy.fft
from scipy.integrate import trapezoid

from .symbols import (
    DispersionSymbol,
    evaluate,
    k_derivative,
    max_k_derivative_order,
    multiply_symbols,
)
from .util import DomainTooSmallError, SeriesTruncationWarning, value_error

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class MultiIndex:
    components: Tuple[int, ...]

    def __post_init__(self):
        comps = tuple(int(c) for c in self.components)
        if any(c < 0 for c in comps):
            value_error("components", comps, "non-negative integers")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def order(self) -> int:
        return sum(self.components)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(c) for c in self.components)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(tuple(a + b for a, b in zip(self.components, other.components)))

    def power(self, v):
        """v^α = Π v_i^α_i; `v` may carry leading point axes."""
        v = np.asarray(v) if not _is_rational_vector(v) else v
        if isinstance(v, np.ndarray):
            out = np.ones(v.shape[:-1])
            for i, c in enumerate(self.components):
                if c:
                    out = out * v[..., i] ** c
            return out
        out = Fraction(1)
        for vi, c in zip(v, self.components):
            out *= Fraction(vi) ** c
        return out


def _is_rational_vector(v) -> bool:
    return isinstance(v, (list, tuple)) and all(isinstance(a, Rational) for a in v)


def _as_index(alpha) -> MultiIndex:
    return alpha if isinstance(alpha, MultiIndex) else MultiIndex(tuple(alpha))


def _compositions(n: int, parts: int):
    # Descending lexicographic order.
    if parts == 1:
        yield (n,)
        return
    for head in range(n, -1, -1):
        for tail in _compositions(n - head, parts - 1):
            yield (head,) + tail


def enumerate_multi_indices(N: int, max_order: int) -> List[MultiIndex]:
    """All α of length N with |α| ≤ max_order, graded by order and
    descending lexicographically within an order."""
    if N < 1:
        value_error("N", N, "at least 1")
    if max_order < 0:
        value_error("max_order", max_order, "a non-negative integer")
    return [
        MultiIndex(c) for n in range(max_order + 1) for c in _compositions(n, N)
    ]


def multinomial_reduce(a: Sequence, n: int):
    """Both sides of Σ_{|β|=n} a^β/β! = (Σ a_i)^n / n!.

    Integer or Fraction inputs are handled in exact rational arithmetic.
    """
    if n < 0:
        value_error("n", n, "a non-negative integer")
    exact = all(isinstance(v, Rational) for v in a)
    if exact:
        values = [Fraction(v) for v in a]
        lhs = sum(
            (beta.power(values) / beta.factorial for beta in _order_n(len(a), n)),
            Fraction(0),
        )
        rhs = sum(values, Fraction(0)) ** n / math.factorial(n)
        return lhs, rhs
    values = [float(v) for v in a]
    lhs = 0.0
    for beta in _order_n(len(a), n):
        term = 1.0
        for v, c in zip(values, beta.components):
            term *= v**c
        lhs += term / beta.factorial
    rhs = math.fsum(values) ** n / math.factorial(n)
    return lhs, rhs


def _order_n(N: int, n: int) -> List[MultiIndex]:
    return [MultiIndex(c) for c in _compositions(n, N)]


@dataclass
class MomentTable:
    """Moments K_α of a momentum distribution, optionally per grid point.

    ``scale`` records the width w̃ of the distribution when known, so that
    |K_α| = O(w̃^{−|α|}).
    """

    dim: int
    max_order: int
    entries: Dict[MultiIndex, Union[float, np.ndarray]]
    normalized: bool = True
    scale: Optional[float] = None

    def __getitem__(self, alpha) -> Union[float, np.ndarray]:
        return self.entries[_as_index(alpha)]

    def get(self, alpha, default=0.0):
        return self.entries.get(_as_index(alpha), default)

    def __contains__(self, alpha) -> bool:
        return _as_index(alpha) in self.entries

    def to_dataframe(self) -> pd.DataFrame:
        rows = []
        for alpha in sorted(self.entries, key=lambda a: (a.order, [-c for c in a.components])):
            values = np.atleast_1d(self.entries[alpha])
            for point, v in enumerate(values):
                row = {f"alpha_{i}": c for i, c in enumerate(alpha.components)}
                if values.size > 1:
                    row["point"] = point
                row["K"] = float(v)
                rows.append(row)
        return pd.DataFrame(rows)

    def write_csv(self, f: IO):
        self.to_dataframe().to_csv(f, index=False, float_format="%.17g")


def cgo_moment_table(k_dprime, max_order: int = 4) -> MomentTable:
    """Moments of the complex-eikonal ansatz: K_α = 0 for odd |α| and
    K_α = (−1)^n (k″)^α for |α| = 2n."""
    k_dprime = np.asarray(k_dprime, dtype=float)
    if k_dprime.ndim == 0:
        k_dprime = k_dprime[np.newaxis]
    N = k_dprime.shape[-1]
    entries: Dict[MultiIndex, Union[float, np.ndarray]] = {}
    for alpha in enumerate_multi_indices(N, max_order):
        if alpha.order % 2:
            value = np.zeros(k_dprime.shape[:-1])
        else:
            value = (-1) ** (alpha.order // 2) * alpha.power(k_dprime)
        entries[alpha] = value if value.ndim else float(value)
    return MomentTable(dim=N, max_order=max_order, entries=entries, normalized=True)


def apply_momentum_distribution(
    K: MomentTable, A: DispersionSymbol, x, k_center
) -> Union[float, np.ndarray]:
    """Weak action Σ_β K_β/β! ∂_k^β A(x, k_center) of the δ-series.

    The (−1)^{|β|} attached to ∂^β δ cancels against the sign from
    integrating by parts, so for A = k² in 1D and K = {1, 0, −g²} the result
    is k² − g². Terms beyond the available derivative order of A are
    dropped with a SeriesTruncationWarning.
    """
    limit = max_k_derivative_order(A)
    total = 0.0
    truncated = []
    for beta, k_beta in K.entries.items():
        if beta.order > limit:
            truncated.append(beta)
            continue
        total = total + k_beta * k_derivative(A, beta.components, x, k_center) / beta.factorial
    if truncated:
        order = int(limit)
        warnings.warn(
            f"Moment series for {A.name!r} truncated at order {order}.",
            SeriesTruncationWarning,
        )
    return _squeeze(total)


def moment_series(
    K: MomentTable, D: DispersionSymbol, A: Optional[DispersionSymbol], x, k_center
):
    """Series value of ∫ f D′ A dk̃ from the moments of f."""
    product = D if A is None else multiply_symbols(D, A)
    return apply_momentum_distribution(K, product, x, k_center)


def dispersion_moment_residuals(
    D: DispersionSymbol,
    x,
    k_center,
    K: MomentTable,
    beta_max: int,
    alpha_truncation: int,
) -> Dict[MultiIndex, Union[float, np.ndarray]]:
    """Residuals Σ_{|α|≤T} (1/α!) ∂_k^α D′ K_{α+β} for every |β| ≤ beta_max."""
    if alpha_truncation > max_k_derivative_order(D):
        value_error(
            "alpha_truncation",
            alpha_truncation,
            f"at most {max_k_derivative_order(D)} for symbol {D.name!r}",
        )
    alphas = enumerate_multi_indices(D.dim, alpha_truncation)
    derivs = {a: k_derivative(D, a.components, x, k_center) / a.factorial for a in alphas}
    missing = False
    out: Dict[MultiIndex, Union[float, np.ndarray]] = {}
    for beta in enumerate_multi_indices(D.dim, beta_max):
        total = 0.0
        for alpha in alphas:
            index = alpha + beta
            if index.order > K.max_order:
                missing = True
                continue
            total = total + derivs[alpha] * K.get(index)
        out[beta] = _squeeze(total)
    if missing:
        logger.debug(
            f"Moments beyond order {K.max_order} treated as zero "
            f"(beta_max={beta_max}, alpha_truncation={alpha_truncation})."
        )
    return out


def collapse_cgo_residuals(
    residuals: Mapping[MultiIndex, Union[float, np.ndarray]], k_dprime
) -> Dict[MultiIndex, Union[float, np.ndarray]]:
    """Divide each β residual of the CGO table by (−1)^{⌊|β|/2⌋}(k″)^β.

    The even-β results all equal the even series and the odd-β results all
    equal the odd series; indices with (k″)^β = 0 are omitted.
    """
    k_dprime = np.asarray(k_dprime, dtype=float)
    out = {}
    for beta, value in residuals.items():
        factor = (-1) ** (beta.order // 2) * beta.power(k_dprime)
        if np.all(factor != 0):
            out[beta] = _squeeze(value / factor)
    return out


def _fd_weights(offsets: np.ndarray, order: int) -> np.ndarray:
    # Weights w with Σ w_i f(t_i) ≈ f^(order)(0).
    n = offsets.size
    vander = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


def directional_derivatives(
    D: DispersionSymbol, x, k, direction, max_power: int
) -> List[Union[float, np.ndarray]]:
    """[v·∂_k]^j D′ at (x, k) for j = 0..max_power.

    Exact for polynomial symbols; otherwise from a central stencil of
    ``D′(x, k + t v)``.
    """
    direction = np.asarray(direction, dtype=float)
    out: List[Union[float, np.ndarray]] = []
    if D.is_polynomial:
        for j in range(max_power + 1):
            total = 0.0
            for alpha in _order_n(D.dim, j):
                coeff = math.factorial(j) / alpha.factorial
                total = total + coeff * alpha.power(direction) * k_derivative(
                    D, alpha.components, x, k
                )
            out.append(_squeeze(total))
        return out
    k = np.asarray(k, dtype=float)
    norm = float(np.max(np.linalg.norm(np.atleast_2d(direction), axis=-1)))
    if norm == 0:
        value = evaluate(D, x, k)[0]
        return [_squeeze(value)] + [_squeeze(np.zeros_like(value))] * max_power
    h = 1e-2 * max(1.0, float(np.max(np.abs(k)))) / norm
    m = max_power // 2 + 2
    offsets = np.arange(-m, m + 1) * h
    samples = np.stack([evaluate(D, x, k + t * direction)[0] for t in offsets], 0)
    for j in range(max_power + 1):
        w = _fd_weights(offsets, j)
        out.append(_squeeze(np.tensordot(w, samples, axes=(0, 0))))
    return out


def cgo_series_pair(D: DispersionSymbol, x, k, k_dprime, n_max: int = 2):
    """Even and odd complex-eikonal series

    even = Σ_n (−1)^n/(2n)! [k″·∂_k]^{2n} D′,
    odd = Σ_n (−1)^{n+1}/(2n+1)! [k″·∂_k]^{2n+1} D′, n ≤ n_max.
    """
    powers = directional_derivatives(D, x, k, k_dprime, 2 * n_max + 1)
    even = sum((-1) ** n / math.factorial(2 * n) * powers[2 * n] for n in range(n_max + 1))
    odd = sum(
        (-1) ** (n + 1) / math.factorial(2 * n + 1) * powers[2 * n + 1]
        for n in range(n_max + 1)
    )
    return _squeeze(even), _squeeze(odd)


@dataclass(frozen=True)
class MomentumDensity:
    """A smooth density f(k̃) sampled on a tensor grid of offsets k̃."""

    axes: Tuple[np.ndarray, ...] = field(compare=False)
    values: np.ndarray = field(compare=False)
    width: Optional[float] = None

    @property
    def dim(self) -> int:
        return len(self.axes)

    def mesh(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(grids, -1)

    def gradient(self, axis: int) -> "MomentumDensity":
        """Spectral derivative along `axis`."""
        a = self.axes[axis]
        step = a[1] - a[0]
        kappa = 2 * np.pi * scipy.fft.fftfreq(a.size, step)
        shape = [1] * self.dim
        shape[axis] = -1
        spectrum = scipy.fft.fft(self.values, axis=axis) * (1j * kappa.reshape(shape))
        return MomentumDensity(
            axes=self.axes, values=scipy.fft.ifft(spectrum, axis=axis).real
        )


def gaussian_density(
    dim: int, width: float, n: int = 401, extent: float = 8.0
) -> MomentumDensity:
    """Isotropic Gaussian density of standard deviation `width`, sampled on
    ±extent·width per axis."""
    if not width > 0:
        value_error("width", width, "a positive number")
    axis = np.linspace(-extent * width, extent * width, n)
    axes = (axis,) * dim
    r2 = np.sum(
        np.stack(np.meshgrid(*axes, indexing="ij"), -1) ** 2, axis=-1
    )
    values = np.exp(-r2 / (2 * width**2)) / (np.sqrt(2 * np.pi) * width) ** dim
    return MomentumDensity(axes=axes, values=values, width=width)


def integrate_density(f: MomentumDensity, integrand: np.ndarray) -> float:
    """Trapezoid ∫ f(k̃)·integrand(k̃) dk̃ over the tensor grid."""
    total = f.values * integrand
    for axis in reversed(range(f.dim)):
        total = trapezoid(total, f.axes[axis], axis=axis)
    return float(total)


def _check_truncation(f: MomentumDensity, mass: float):
    edge = 0.0
    for axis in range(f.dim):
        a = f.axes[axis]
        step = abs(a[1] - a[0])
        faces = np.abs(np.take(f.values, [0, -1], axis=axis)).sum()
        other = float(np.prod([abs(b[1] - b[0]) for i, b in enumerate(f.axes) if i != axis]))
        edge += faces * step * other
    if edge > 1e-12 * abs(mass):
        raise DomainTooSmallError(
            f"Density mass at the quadrature boundary is {edge / abs(mass):.3g} "
            "of the total; enlarge the domain."
        )


def quadrature_oracle(
    f: MomentumDensity,
    D: Optional[DispersionSymbol],
    A: Optional[DispersionSymbol],
    x,
    k_center,
) -> float:
    """Direct quadrature of ∫ f(k̃) D′(x, k_c + k̃) A(x, k_c + k̃) dk̃ with f
    normalised numerically; ``None`` stands for the constant 1."""
    mass = integrate_density(f, np.ones_like(f.values))
    _check_truncation(f, mass)
    k = np.asarray(k_center, dtype=float) + f.mesh()
    x = np.broadcast_to(np.asarray(x, dtype=float), k.shape)
    integrand = np.ones(f.values.shape)
    for symbol in (D, A):
        if symbol is not None:
            integrand = integrand * evaluate(symbol, x, k)[0]
    return integrate_density(f, integrand) / mass


def density_moment_table(f: MomentumDensity, max_order: int) -> MomentTable:
    """Normalised moments K_α = ∫ k̃^α f / ∫ f of a sampled density."""
    mesh = f.mesh()
    mass = integrate_density(f, np.ones_like(f.values))
    _check_truncation(f, mass)
    entries: Dict[MultiIndex, Union[float, np.ndarray]] = {}
    for alpha in enumerate_multi_indices(f.dim, max_order):
        entries[alpha] = integrate_density(f, alpha.power(mesh)) / mass
    return MomentTable(
        dim=f.dim,
        max_order=max_order,
        entries=entries,
        normalized=True,
        scale=None if f.width is None else 1 / f.width,
    )


def _squeeze(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value
