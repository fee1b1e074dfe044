"""Parameter definitions for complex geometrical optics functions."""

from typing import Literal

from typing_extensions import Annotated, TypeAlias

method: TypeAlias = Annotated[
    Literal["abcd", "ode"],
    """
    Beam propagation method: "abcd" applies the lens-like ray matrix to the
    complex beam parameter, "ode" integrates the equivalent Riccati and
    envelope equations with RK4.
    """,
]

method_default: method = "abcd"

gouy: TypeAlias = Annotated[
    bool,
    "If True, include the amplitude (Gouy) phase in the reconstructed phase S.",
]

series_order: TypeAlias = Annotated[
    int,
    """
    Highest n kept in the even and odd complex-eikonal series, which carry
    derivatives of the symbol up to order 2n + 1.
    """,
]

series_order_default: series_order = 2

moment_order: TypeAlias = Annotated[
    int,
    "Highest order |α| of the moments K_α kept in the moment residual.",
]

moment_order_default: moment_order = 4
