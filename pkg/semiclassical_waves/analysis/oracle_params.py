"""Parameter definitions for reference-solution functions."""

from typing_extensions import Annotated, TypeAlias

steps_per_length: TypeAlias = Annotated[
    int,
    """
    Number of split-step increments per unit of L (or per Rayleigh range in
    a homogeneous medium).
    """,
]

steps_per_length_default: steps_per_length = 2000
