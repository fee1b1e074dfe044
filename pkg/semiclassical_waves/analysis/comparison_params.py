"""Parameter definitions for method comparison functions."""

from typing import Mapping, Optional

from typing_extensions import Annotated, TypeAlias

thresholds: TypeAlias = Annotated[
    Optional[Mapping[str, float]],
    """
    Pass thresholds keyed by metric name, overriding the defaults for the
    metrics given.
    """,
]

thresholds_default: Mapping[str, float] = {
    "width_law": 1e-6,
    "kinetic_analytic": 1e-2,
    "kinetic_cgo": 1e-2,
    "splitstep_analytic": 1e-6,
    "go_focus": 1e-2,
    "focal_planes": 1.0,
    "center_trace": 1.0,
    "ray_dispersion": 1e-9,
    "ray_kz": 1e-9,
    "ray_weight": 0.0,
}

width_law_ratios: TypeAlias = Annotated[
    tuple,
    "Values of L/zR at which the width law is checked.",
]

width_law_ratios_default: width_law_ratios = (0.5, 1.0, 2.0)
