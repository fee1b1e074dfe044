# flake8: noqa
from .cgo import GaussianBeamState, propagate_beam, reconstruct_field
from .config import ScenarioConfig
from .kinetic import advect_wigner, trace_ray
from .lenslike import LensLike
from .symbols import MediumParameters, builtin_symbol
from .util import SemiclassicalError
from .wigner import SampledField, WignerGrid, wigner_transform

try:
    import importlib.metadata as importlib_metadata
except ModuleNotFoundError:
    import importlib_metadata  # type: ignore

# this will read version from pyproject.toml
__version__ = importlib_metadata.version(__name__)
