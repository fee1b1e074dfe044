"""Dispersion and observable symbols on phase space.

A symbol is a function of position ``x`` and wavevector ``k``, both given as
arrays whose last axis has length ``dim``. Symbols that are polynomial in
``x`` and ``k`` are stored as a table of monomials, which gives exact
derivatives of every order, evaluation at complex wavevectors and a closed
algebra (sum, product, carrier shift). Other symbols wrap plain functions
and fall back to central finite differences.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from .util import (
    InputError,
    SymbolEvaluationError,
    UnsupportedExtensionError,
    check_types,
    value_error,
)

logger = logging.getLogger(__name__)

# A monomial is keyed by its x-exponents and k-exponents.
Monomial = Tuple[Tuple[int, ...], Tuple[int, ...]]
MonomialTable = Tuple[Tuple[Monomial, float], ...]

FD_STEP_SCALE = 1e-5


@dataclass(frozen=True)
class MediumParameters:
    """Parameters of a lens-like medium with n² = n0²(1 − (x/L)²).

    Lengths and wavevectors may be in any consistent units. ``L`` may be
    ``inf`` for a homogeneous medium.
    """

    k0: float
    L: float
    n0: float = 1.0

    def __post_init__(self):
        if not self.k0 > 0:
            value_error("k0", self.k0, "a positive number")
        if not self.L > 0:
            value_error("L", self.L, "a positive number")
        if not self.n0 > 0:
            value_error("n0", self.n0, "a positive number")

    @classmethod
    def from_frequency(cls, omega: float, L: float, n0: float = 1.0, c: float = 1.0):
        return cls(k0=omega * n0 / c, L=L, n0=n0)

    def omega(self, c: float = 1.0) -> float:
        return self.k0 * c / self.n0

    def rayleigh_range(self, w0: float) -> float:
        if not w0 > 0:
            value_error("w0", w0, "a positive number")
        return self.k0 * w0**2 / 2

    @property
    def homogeneous(self) -> bool:
        return not np.isfinite(self.L)


@dataclass(frozen=True)
class DispersionSymbol:
    """A symbol D = D′ + iD″ on a phase space of dimension ``dim``.

    Exactly one of ``monomials`` (polynomial symbols) or ``real_part``
    (generic symbols) defines D′. ``imag_part`` is an optional function of
    ``(x, k)`` giving D″; when absent D″ is identically zero.
    ``length_scale`` and ``k_scale`` set finite-difference steps and the
    natural magnitude ``k_scale**order`` of the symbol.
    """

    name: str
    dim: int
    order: int
    monomials: Optional[MonomialTable] = None
    real_part: Optional[Callable] = field(default=None, compare=False)
    imag_part: Optional[Callable] = field(default=None, compare=False)
    length_scale: float = 1.0
    k_scale: float = 1.0

    def __post_init__(self):
        if self.dim < 1:
            value_error("dim", self.dim, "at least 1")
        if (self.monomials is None) == (self.real_part is None):
            raise InputError(
                "Exactly one of monomials or real_part must define the symbol."
            )
        if self.monomials is not None:
            for (a, b), _ in self.monomials:
                if len(a) != self.dim or len(b) != self.dim:
                    value_error("monomials", (a, b), f"exponents of length {self.dim}")

    @property
    def is_polynomial(self) -> bool:
        return self.monomials is not None

    @property
    def scale(self) -> float:
        return float(self.k_scale) ** self.order

    @property
    def lossless(self) -> bool:
        return self.imag_part is None

    def k_degree(self) -> int:
        if self.monomials is None:
            raise UnsupportedExtensionError(f"Symbol {self.name!r} is not polynomial.")
        return max((sum(b) for (_, b), _ in self.monomials), default=0)

    def depends_on_position(self, axis: int) -> bool:
        """Whether D′ may vary along coordinate `axis`; generic symbols are
        assumed to."""
        if self.monomials is None:
            return True
        return any(a[axis] > 0 for (a, _), c in self.monomials if c != 0)


class SymbolDerivatives(NamedTuple):
    gradient_x: np.ndarray
    gradient_k: np.ndarray
    hessian_kk: Optional[np.ndarray]
    mixed_xk: Optional[np.ndarray]


def _normalise_monomials(monomials: Mapping[Monomial, float]) -> MonomialTable:
    merged: Dict[Monomial, float] = {}
    for (a, b), c in monomials.items():
        key = (tuple(int(i) for i in a), tuple(int(i) for i in b))
        if min(key[0] + key[1], default=0) < 0:
            value_error("monomials", key, "non-negative exponents")
        merged[key] = merged.get(key, 0.0) + c
    return tuple(sorted((key, c) for key, c in merged.items() if c != 0))


def polynomial_symbol(
    name: str,
    monomials: Mapping[Monomial, float],
    *,
    dim: Optional[int] = None,
    order: Optional[int] = None,
    imag_part: Optional[Callable] = None,
    length_scale: float = 1.0,
    k_scale: float = 1.0,
) -> DispersionSymbol:
    """Build the symbol Σ c·x^a·k^b from a mapping ``{(a, b): c}``."""
    table = _normalise_monomials(monomials)
    if dim is None:
        if not monomials:
            value_error("dim", dim, "an explicit dimension for an empty symbol")
        dim = len(next(iter(monomials))[0])
    if order is None:
        order = max((sum(b) for (_, b), _ in table), default=0)
    return DispersionSymbol(
        name=name,
        dim=dim,
        order=order,
        monomials=table,
        imag_part=imag_part,
        length_scale=length_scale,
        k_scale=k_scale,
    )


def function_symbol(
    name: str,
    real_part: Callable,
    *,
    dim: int,
    order: int,
    imag_part: Optional[Callable] = None,
    length_scale: float = 1.0,
    k_scale: float = 1.0,
) -> DispersionSymbol:
    """Wrap a vectorised function ``real_part(x, k)`` as a symbol."""
    return DispersionSymbol(
        name=name,
        dim=dim,
        order=order,
        real_part=real_part,
        imag_part=imag_part,
        length_scale=length_scale,
        k_scale=k_scale,
    )


def _points(symbol: DispersionSymbol, x, k, complex_k=False):
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=complex if complex_k else float)
    if symbol.dim == 1:
        if x.ndim == 0:
            x = x[np.newaxis]
        if k.ndim == 0:
            k = k[np.newaxis]
    if x.shape[-1] != symbol.dim or k.shape[-1] != symbol.dim:
        raise InputError(
            f"Expected position and wavevector with last axis of length "
            f"{symbol.dim}, found shapes {x.shape} and {k.shape}."
        )
    return np.broadcast_arrays(x, k)


def _eval_table(table: MonomialTable, x: np.ndarray, k: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast_shapes(x.shape[:-1], k.shape[:-1]), dtype=k.dtype)
    for (a, b), c in table:
        term = np.full(out.shape, c, dtype=out.dtype)
        for i, p in enumerate(a):
            if p == 1:
                term = term * x[..., i]
            elif p > 1:
                term = term * x[..., i] ** p
        for i, p in enumerate(b):
            if p == 1:
                term = term * k[..., i]
            elif p > 1:
                term = term * k[..., i] ** p
        out = out + term
    return out


@lru_cache(maxsize=1024)
def _differentiate_table(
    table: MonomialTable, dx: Tuple[int, ...], dk: Tuple[int, ...]
) -> MonomialTable:
    out: Dict[Monomial, float] = {}
    for (a, b), c in table:
        if any(p < q for p, q in zip(a, dx)) or any(p < q for p, q in zip(b, dk)):
            continue
        factor = 1.0
        for p, q in zip(a + b, dx + dk):
            factor *= math.perm(p, q)
        key = (
            tuple(p - q for p, q in zip(a, dx)),
            tuple(p - q for p, q in zip(b, dk)),
        )
        out[key] = out.get(key, 0.0) + c * factor
    return tuple(sorted((key, c) for key, c in out.items() if c != 0))


def _unit(dim: int, i: int, n: int = 1) -> Tuple[int, ...]:
    return tuple(n if j == i else 0 for j in range(dim))


def _check_finite(symbol, values, x, k):
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(np.atleast_1d(values)))[0]
        xx = np.atleast_2d(x)[tuple(bad)] if x.ndim > 1 else x
        kk = np.atleast_2d(k)[tuple(bad)] if k.ndim > 1 else k
        raise SymbolEvaluationError(
            f"Symbol {symbol.name!r} is not finite at x={xx!r}, k={kk!r}.",
            x=xx,
            k=kk,
        )


def _real_part(symbol: DispersionSymbol, x: np.ndarray, k: np.ndarray):
    if symbol.monomials is not None:
        return _eval_table(symbol.monomials, x, k)
    return np.asarray(symbol.real_part(x, k), dtype=float)  # type: ignore


def evaluate(symbol: DispersionSymbol, x, k) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate D′(x, k) and D″(x, k).

    Raises
    ------
    SymbolEvaluationError
        If either part is not finite, reporting the first offending point.

    """
    x, k = _points(symbol, x, k)
    dp = _real_part(symbol, x, k)
    if symbol.imag_part is None:
        dpp = np.zeros_like(dp)
    else:
        dpp = np.broadcast_to(
            np.asarray(symbol.imag_part(x, k), dtype=float), dp.shape
        ).copy()
    _check_finite(symbol, dp, x, k)
    _check_finite(symbol, dpp, x, k)
    return dp, dpp


def _k_steps(symbol, k, step_scale):
    kmag = np.linalg.norm(k, axis=-1)
    return step_scale * np.maximum(1.0, kmag)


def _fd_gradient(symbol, x, k, wrt, step_scale):
    dim = symbol.dim
    out = np.empty(np.broadcast_shapes(x.shape, k.shape))
    for i in range(dim):
        if wrt == "k":
            h = _k_steps(symbol, k, step_scale)
            e = np.zeros(dim)
            e[i] = 1.0
            fp = _real_part(symbol, x, k + h[..., None] * e)
            fm = _real_part(symbol, x, k - h[..., None] * e)
        else:
            h = step_scale * symbol.length_scale
            e = np.zeros(dim)
            e[i] = h
            fp = _real_part(symbol, x + e, k)
            fm = _real_part(symbol, x - e, k)
        out[..., i] = (fp - fm) / (2 * h)
    return out


def _fd_hessian_kk(symbol, x, k, step_scale):
    dim = symbol.dim
    h = _k_steps(symbol, k, step_scale)[..., None]
    f0 = _real_part(symbol, x, k)
    out = np.empty(k.shape + (dim,))
    for i in range(dim):
        ei = np.zeros(dim)
        ei[i] = 1.0
        for j in range(i, dim):
            if i == j:
                fp = _real_part(symbol, x, k + h * ei)
                fm = _real_part(symbol, x, k - h * ei)
                v = (fp - 2 * f0 + fm) / h[..., 0] ** 2
            else:
                ej = np.zeros(dim)
                ej[j] = 1.0
                v = (
                    _real_part(symbol, x, k + h * (ei + ej))
                    - _real_part(symbol, x, k + h * (ei - ej))
                    - _real_part(symbol, x, k - h * (ei - ej))
                    + _real_part(symbol, x, k - h * (ei + ej))
                ) / (4 * h[..., 0] ** 2)
            out[..., i, j] = v
            out[..., j, i] = v
    return out


def _fd_mixed_xk(symbol, x, k, step_scale):
    dim = symbol.dim
    hx = step_scale * symbol.length_scale
    out = np.empty(k.shape + (dim,))
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = hx
        gp = _fd_gradient(symbol, x + e, k, "k", step_scale)
        gm = _fd_gradient(symbol, x - e, k, "k", step_scale)
        out[..., i, :] = (gp - gm) / (2 * hx)
    return out


def derivatives(
    symbol: DispersionSymbol,
    x,
    k,
    order: int = 2,
    method: Optional[str] = None,
    step_scale: float = FD_STEP_SCALE,
) -> SymbolDerivatives:
    """Partial derivatives of D′ up to total order two.

    Parameters
    ----------
    symbol : DispersionSymbol
    x, k : array_like
        Points, last axis of length ``symbol.dim``.
    order : {1, 2}
        With 1 only the gradients are computed.
    method : {"analytic", "finite_difference"}, optional
        Defaults to analytic for polynomial symbols.
    step_scale : float
        Relative finite-difference step: ``step_scale·max(1, |k|)`` in k and
        ``step_scale·length_scale`` in x.

    Returns
    -------
    SymbolDerivatives
        ``mixed_xk[..., i, j]`` is ∂²D′/∂x_i∂k_j.

    """
    if order not in (1, 2):
        value_error("order", order, "1 or 2")
    if method is None:
        method = "analytic" if symbol.is_polynomial else "finite_difference"
    if method == "analytic" and not symbol.is_polynomial:
        raise UnsupportedExtensionError(
            f"Symbol {symbol.name!r} has no analytic derivatives."
        )
    if method not in ("analytic", "finite_difference"):
        value_error("method", method, "'analytic' or 'finite_difference'")
    x, k = _points(symbol, x, k)
    dim = symbol.dim
    zero = _unit(dim, 0, 0)

    if method == "analytic":
        table = symbol.monomials

        def partial(dx, dk):
            return _eval_table(_differentiate_table(table, dx, dk), x, k)

        grad_x = np.stack([partial(_unit(dim, i), zero) for i in range(dim)], -1)
        grad_k = np.stack([partial(zero, _unit(dim, i)) for i in range(dim)], -1)
        hess = mixed = None
        if order == 2:
            hess = np.empty(grad_k.shape + (dim,))
            mixed = np.empty(grad_k.shape + (dim,))
            for i in range(dim):
                for j in range(dim):
                    dk = tuple(
                        (1 if m == i else 0) + (1 if m == j else 0) for m in range(dim)
                    )
                    hess[..., i, j] = partial(zero, dk)
                    mixed[..., i, j] = partial(_unit(dim, i), _unit(dim, j))
    else:
        grad_x = _fd_gradient(symbol, x, k, "x", step_scale)
        grad_k = _fd_gradient(symbol, x, k, "k", step_scale)
        hess = mixed = None
        if order == 2:
            hess = _fd_hessian_kk(symbol, x, k, step_scale)
            mixed = _fd_mixed_xk(symbol, x, k, step_scale)

    for values in (grad_x, grad_k, hess, mixed):
        if values is not None and not np.all(np.isfinite(values)):
            raise SymbolEvaluationError(
                f"Derivatives of symbol {symbol.name!r} are not finite.", x=x, k=k
            )
    return SymbolDerivatives(grad_x, grad_k, hess, mixed)


def k_derivative(symbol: DispersionSymbol, beta: Tuple[int, ...], x, k) -> np.ndarray:
    """∂_k^β D′ at (x, k), for any order on polynomial symbols and up to
    order two otherwise."""
    beta = tuple(int(b) for b in beta)
    if len(beta) != symbol.dim:
        value_error("beta", beta, f"a multi-index of length {symbol.dim}")
    n = sum(beta)
    if symbol.is_polynomial:
        x, k = _points(symbol, x, k)
        table = _differentiate_table(symbol.monomials, _unit(symbol.dim, 0, 0), beta)
        return _eval_table(table, x, k)
    if n == 0:
        return evaluate(symbol, x, k)[0]
    if n > 2:
        raise UnsupportedExtensionError(
            f"Symbol {symbol.name!r} provides k-derivatives up to order 2 only."
        )
    d = derivatives(symbol, x, k, order=n)
    idx = [i for i, b in enumerate(beta) for _ in range(b)]
    if n == 1:
        return d.gradient_k[..., idx[0]]
    return d.hessian_kk[..., idx[0], idx[1]]  # type: ignore


def max_k_derivative_order(symbol: DispersionSymbol) -> float:
    return math.inf if symbol.is_polynomial else 2


@check_types
def poisson_bracket(f: DispersionSymbol, g: DispersionSymbol, x, k) -> np.ndarray:
    """Σ_i (∂f/∂x_i ∂g/∂k_i − ∂f/∂k_i ∂g/∂x_i) at (x, k)."""
    if f.dim != g.dim:
        raise InputError(f"Dimension mismatch: {f.dim} and {g.dim}.")
    df = derivatives(f, x, k, order=1)
    dg = derivatives(g, x, k, order=1)
    return np.sum(df.gradient_x * dg.gradient_k - df.gradient_k * dg.gradient_x, -1)


@check_types
def extend_complex(symbol: DispersionSymbol, x, kbar) -> np.ndarray:
    """Evaluate the polynomial D′ at a complex wavevector k + ik″.

    Raises
    ------
    UnsupportedExtensionError
        If the symbol is not polynomial in k.

    """
    if not symbol.is_polynomial:
        raise UnsupportedExtensionError(
            f"Symbol {symbol.name!r} is not polynomial and has no complex extension."
        )
    x, kbar = _points(symbol, x, kbar, complex_k=True)
    return _eval_table(symbol.monomials, x, kbar)  # type: ignore


def _require_polynomial(*symbols: DispersionSymbol):
    for s in symbols:
        if not s.is_polynomial:
            raise UnsupportedExtensionError(
                f"Symbol algebra needs polynomial symbols, {s.name!r} is not."
            )
    if len({s.dim for s in symbols}) > 1:
        raise InputError("Symbols have different dimensions.")


def _derived(symbol: DispersionSymbol, name: str, table: Dict[Monomial, float]):
    return polynomial_symbol(
        name,
        table,
        dim=symbol.dim,
        length_scale=symbol.length_scale,
        k_scale=symbol.k_scale,
    )


def add_symbols(f: DispersionSymbol, g: DispersionSymbol) -> DispersionSymbol:
    _require_polynomial(f, g)
    table: Dict[Monomial, float] = {}
    for key, c in f.monomials + g.monomials:  # type: ignore
        table[key] = table.get(key, 0.0) + c
    return _derived(f, f"({f.name})+({g.name})", table)


def scale_symbol(f: DispersionSymbol, factor: float) -> DispersionSymbol:
    _require_polynomial(f)
    table = {key: factor * c for key, c in f.monomials}  # type: ignore
    return _derived(f, f"{factor!r}*({f.name})", table)


def multiply_symbols(f: DispersionSymbol, g: DispersionSymbol) -> DispersionSymbol:
    """Pointwise product of two polynomial symbols (not the Moyal product)."""
    _require_polynomial(f, g)
    table: Dict[Monomial, float] = {}
    for (a1, b1), c1 in f.monomials:  # type: ignore
        for (a2, b2), c2 in g.monomials:  # type: ignore
            key = (
                tuple(p + q for p, q in zip(a1, a2)),
                tuple(p + q for p, q in zip(b1, b2)),
            )
            table[key] = table.get(key, 0.0) + c1 * c2
    return _derived(f, f"({f.name})*({g.name})", table)


def shift_symbol(f: DispersionSymbol, carrier) -> DispersionSymbol:
    """The symbol D(x, k + carrier).

    For a field e^{i carrier·x}·a(x), D̂ acting on the field equals
    e^{i carrier·x} times the shifted symbol's operator acting on a.
    """
    _require_polynomial(f)
    carrier = tuple(float(c) for c in np.atleast_1d(carrier))
    if len(carrier) != f.dim:
        value_error("carrier", carrier, f"a vector of length {f.dim}")
    table: Dict[Monomial, float] = {}
    for (a, b), c in f.monomials:  # type: ignore
        # Binomial expansion of each (k_i + c_i)^b_i.
        parts = [
            [(j, math.comb(p, j) * ci ** (p - j)) for j in range(p + 1)]
            for p, ci in zip(b, carrier)
        ]
        for combo in _product(parts):
            coeff = c
            for _, w in combo:
                coeff *= w
            key = (a, tuple(j for j, _ in combo))
            table[key] = table.get(key, 0.0) + coeff
    return _derived(f, f"{f.name}[shifted]", table)


def _product(parts):
    if not parts:
        yield ()
        return
    for head in parts[0]:
        for tail in _product(parts[1:]):
            yield (head,) + tail


def helmholtz_lenslike(medium: MediumParameters) -> DispersionSymbol:
    """D′ = −(kx² + kz²) + k0²(1 − x²/L²) on (x, z; kx, kz)."""
    k0, L = medium.k0, medium.L
    table: Dict[Monomial, float] = {
        ((0, 0), (2, 0)): -1.0,
        ((0, 0), (0, 2)): -1.0,
        ((0, 0), (0, 0)): k0**2,
    }
    if not medium.homogeneous:
        table[((2, 0), (0, 0))] = -(k0**2) / L**2
    return polynomial_symbol(
        "helmholtz_lenslike",
        table,
        dim=2,
        order=2,
        length_scale=L if not medium.homogeneous else 1.0,
        k_scale=k0,
    )


def paraxial_oscillator(medium: MediumParameters) -> DispersionSymbol:
    """D′ = kz − k0 + kx²/(2k0) + k0x²/(2L²) on (x, z; kx, kz).

    The zero set is the paraxial dispersion relation; with z as evolution
    parameter the transverse flow is a harmonic oscillator.
    """
    k0, L = medium.k0, medium.L
    table: Dict[Monomial, float] = {
        ((0, 0), (0, 1)): 1.0,
        ((0, 0), (0, 0)): -k0,
        ((0, 0), (2, 0)): 1 / (2 * k0),
    }
    if not medium.homogeneous:
        table[((2, 0), (0, 0))] = k0 / (2 * L**2)
    return polynomial_symbol(
        "paraxial_oscillator",
        table,
        dim=2,
        order=1,
        length_scale=L if not medium.homogeneous else 1.0,
        k_scale=k0,
    )


def free_space(medium: MediumParameters, dim: int = 2) -> DispersionSymbol:
    """D′ = k0² − |k|²."""
    table: Dict[Monomial, float] = {(_unit(dim, 0, 0), _unit(dim, 0, 0)): medium.k0**2}
    for i in range(dim):
        table[(_unit(dim, 0, 0), _unit(dim, i, 2))] = -1.0
    return polynomial_symbol(
        "free_space",
        table,
        dim=dim,
        order=2,
        length_scale=medium.L if not medium.homogeneous else 1.0,
        k_scale=medium.k0,
    )


BUILTIN_SYMBOLS: Dict[str, Callable[[MediumParameters], DispersionSymbol]] = {
    "helmholtz_lenslike": helmholtz_lenslike,
    "paraxial_oscillator": paraxial_oscillator,
    "free_space": free_space,
}


def builtin_symbol(name: str, medium: MediumParameters) -> DispersionSymbol:
    try:
        factory = BUILTIN_SYMBOLS[name]
    except KeyError:
        value_error("name", name, f"one of {sorted(BUILTIN_SYMBOLS)}")
    return factory(medium)
