"""Parameter definitions for wave kinetic functions."""

from typing import Optional, Sequence

from typing_extensions import Annotated, TypeAlias

n_rays: TypeAlias = Annotated[
    Optional[int],
    """
    Number of rays to sample from the launch Wigner function, with
    probability proportional to |W|. If not provided, one ray is launched
    from every node above the threshold.
    """,
]

threshold: TypeAlias = Annotated[
    float,
    "Nodes with |W| below this fraction of the peak launch no ray.",
]

threshold_default: threshold = 1e-8

branches: TypeAlias = Annotated[
    Sequence[str],
    'Dispersion branches to launch, "progressive" and/or "regressive".',
]

branch_share: TypeAlias = Annotated[
    Optional[float],
    """
    Fraction of the launch intensity carried by each branch. Defaults to one
    over the number of branches.
    """,
]

kernel_cells: TypeAlias = Annotated[
    float,
    "Standard deviation of the Gaussian deposition kernel, in grid cells.",
]

kernel_cells_default: kernel_cells = 2.0
