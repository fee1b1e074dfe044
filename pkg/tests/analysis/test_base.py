import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pytest_cases import parametrize_with_cases

from semiclassical_waves import LensLike, ScenarioConfig


# N.B., here we use pytest_cases to parametrize tests. Each
# function whose name begins with "case_" defines a set of
# inputs to the test functions. See the documentation for
# pytest_cases for more information, e.g.:
#
# https://smarie.github.io/python-pytest-cases/#basic-usage
#
# We use this approach here because we want to use fixtures
# as test parameters, which is otherwise hard to do with
# pytest alone.


def case_focusing(focusing_beam):
    return focusing_beam


def case_offset(offset_beam):
    return offset_beam


def case_defocusing(defocusing_beam):
    return defocusing_beam


def case_tilted(tilted_beam):
    return tilted_beam


@parametrize_with_cases("api", cases=".")
def test_x_grid(api):
    x = api.x_grid
    s = api.scenario
    half = 6.0 * s.max_width() + s.center_amplitude()
    dx = 2 * half / len(x)

    assert isinstance(x, np.ndarray)
    assert x.ndim == 1
    assert_allclose(np.diff(x), dx)
    assert x[0] == pytest.approx(-half)
    assert x[-1] == pytest.approx(half - dx)
    # The beam stays on the grid over a whole period.
    xc = s.center(api.z_stations())
    assert x[0] < xc.min() - 4 * s.w0
    assert x[-1] > xc.max() + 4 * s.w0


@parametrize_with_cases("api", cases=".")
def test_z_stations(api):
    z = api.z_stations(n_z=8, periods=0.5)
    assert_allclose(z, np.linspace(0, math.pi, 8, endpoint=False))

    z = api.z_stations()
    assert len(z) == 64
    assert z[0] == 0
    assert z[-1] < 2 * math.pi


def test_z_stations_homogeneous():
    api = LensLike(L=math.inf, w0=0.05, log=None, show_progress=False)
    z = api.z_stations(n_z=4)
    # One station period spans the Rayleigh range.
    assert_allclose(z, np.linspace(0, api.scenario.zR, 4, endpoint=False))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_x=8),
        dict(x_extent=0.0),
        dict(L_over_zR=0.0),
        dict(L=math.inf),
        dict(integrator_tolerance=0.0),
        dict(theta0=math.nan),
    ],
)
def test_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        LensLike(log=None, show_progress=False, **kwargs)


@pytest.mark.parametrize(
    "z_values",
    [[], [-0.1, 0.5]],
)
def test_bad_z_values(focusing_beam, z_values):
    with pytest.raises(ValueError):
        focusing_beam.analytic_width(z_values)


def test_properties(focusing_beam):
    w0 = math.sqrt(2 / (1000 * 0.5))
    assert focusing_beam.medium.k0 == 1000
    assert focusing_beam.medium.L == 1
    assert focusing_beam.scenario.w0 == pytest.approx(w0)
    assert focusing_beam.scenario.L_over_zR == pytest.approx(0.5)
    assert focusing_beam.symbol.dim == 2


def test_repr(focusing_beam):
    text = repr(focusing_beam)
    assert "Lens-like length L" in text
    assert "paraxial_oscillator" in text
    assert "semiclassical_waves" in text


def test_from_config():
    config = ScenarioConfig()
    api = LensLike.from_config(config, x0_over_w0=0.5, log=None, show_progress=False)
    s = api.scenario
    assert s.medium.L == 1
    assert s.L_over_zR == pytest.approx(config.launch.L_over_zR)
    assert s.x0 == pytest.approx(0.5 * s.w0)
    assert len(api.x_grid) == config.grid.n_x
    assert s.theta0 == 0.0
    assert api.integrator_tolerance == config.tolerances.integrator


def test_from_config_tilt_and_tolerance():
    config = ScenarioConfig.from_string(
        "[launch]\ns0_profile = tilted\ntheta0 = 0.03\n[tolerances]\nintegrator = 1e-6\n"
    )
    api = LensLike.from_config(config, log=None, show_progress=False)
    assert api.scenario.theta0 == 0.03
    assert api.integrator_tolerance == 1e-6
    assert "Launch tilt theta0      : 0.03" in repr(api)

    fixed = LensLike(integrator_tolerance=None, log=None, show_progress=False)
    assert fixed.integrator_tolerance is None


def test_results_cache(tmp_path, monkeypatch):
    api = LensLike(
        results_cache=tmp_path.as_posix(), log=None, show_progress=False
    )
    z = [0.0, 0.25]
    first = api.split_step_intensity_map(z)

    cache_dir = tmp_path / "lenslike_split_step_intensity_map_v1"
    entries = list(cache_dir.iterdir())
    assert len(entries) == 1
    assert (entries[0] / "params.json").exists()
    assert (entries[0] / "results.zarr.zip").exists()

    def fail(*args, **kwargs):
        raise AssertionError("cache was not used")

    monkeypatch.setattr(api, "_split_step_fields", fail)
    second = api.split_step_intensity_map(z)
    assert_allclose(second.values, first.values)

    # Different parameters miss the cache.
    with pytest.raises(AssertionError):
        api.split_step_intensity_map(z, steps_per_length=800)
