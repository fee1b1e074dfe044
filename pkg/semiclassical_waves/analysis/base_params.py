"""General parameters common to many functions in the public API."""

from typing import Sequence, Union

import numpy as np
import xarray as xr
from typing_extensions import Annotated, TypeAlias

z: TypeAlias = Annotated[
    float,
    "Axial position, in the length units of the medium.",
]

z_values: TypeAlias = Annotated[
    Union[Sequence[float], np.ndarray],
    """
    Axial positions at which to evaluate, in the length units of the medium.
    Must be non-negative.
    """,
]

x: TypeAlias = Annotated[
    Union[float, Sequence[float], np.ndarray],
    "Transverse position or positions.",
]

k: TypeAlias = Annotated[
    Union[float, Sequence[float], np.ndarray],
    "Transverse wavevector or wavevectors.",
]

symbol: TypeAlias = Annotated[
    str,
    """
    Name of a built-in dispersion symbol, one of "paraxial_oscillator",
    "helmholtz_lenslike" or "free_space".
    """,
]

n_k: TypeAlias = Annotated[
    int,
    """
    Number of wavevector bins kept from the Wigner transform of the launch
    field, centred on k = 0.
    """,
]

n_k_default: n_k = 256

random_seed: TypeAlias = Annotated[
    int,
    "Random seed used for sampling.",
]

intensity_map: TypeAlias = Annotated[
    xr.DataArray,
    "Intensity on the transverse grid (rows) at each axial station (columns).",
]
