import io
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from semiclassical_waves.util import (
    ConfigError,
    IntegrationError,
    LoggingHelper,
    check_types,
    deposit_gaussian,
    hash_params,
    init_filesystem,
    read_grid_csv,
    rk4_integrate,
    value_error,
    write_grid_csv,
)


def test_hash_params_is_stable():
    h1, s1 = hash_params(dict(b=2, a=[1.0, 2.0]))
    h2, s2 = hash_params(dict(a=[1.0, 2.0], b=2))
    assert h1 == h2
    assert s1 == s2
    assert hash_params(dict(a=1))[0] != hash_params(dict(a=2))[0]


def test_value_error():
    with pytest.raises(ValueError, match="Bad value for parameter n"):
        value_error("n", -1, "a positive number")


def test_config_error_message():
    e = ConfigError("Value must be positive.", key="medium.k0", line=4)
    assert str(e) == "key 'medium.k0' (line 4): Value must be positive."
    assert e.key == "medium.k0"
    assert e.line == 4
    assert isinstance(e, ValueError)


def test_check_types():
    @check_types
    def f(n: int, name: str = "x"):
        return n

    assert f(3) == 3
    with pytest.raises(TypeError, match="Parameter 'n'"):
        f("three")


def test_logging_helper():
    out = io.StringIO()
    log = LoggingHelper(name="semiclassical_waves.test", out=out, debug=False)
    log.info("hello")
    log.debug("hidden")
    log.close()
    log.info("after close")
    assert out.getvalue() == "[INFO] hello\n"


def test_logging_helper_debug():
    out = io.StringIO()
    log = LoggingHelper(name="semiclassical_waves.test_debug", out=out, debug=True)
    log.debug("details")
    log.close()
    assert out.getvalue() == "[DEBUG] test_logging_helper_debug: details\n"


def test_init_filesystem(tmp_path):
    fs, path = init_filesystem(str(tmp_path) + "/")
    assert not path.endswith("/")
    assert fs.exists(path)


def test_rk4_exponential():
    t, y = rk4_integrate(lambda t, y: -y, np.array([1.0]), (0.0, 1.0), step=0.01)
    assert_allclose(y[-1], math.exp(-1), rtol=1e-9)
    assert t[0] == 0.0
    assert t[-1] == 1.0


def test_rk4_stations_and_backward():
    rhs = lambda t, y: np.array([y[1], -y[0]])  # noqa: E731
    t, y = rk4_integrate(
        rhs, np.array([1.0, 0.0]), (0.0, -2.0), step=0.01, stations=[-0.5, -2.0]
    )
    assert_allclose(t, [0.0, -0.5, -2.0])
    assert_allclose(y[:, 0], np.cos(t), rtol=1e-8)
    with pytest.raises(ValueError):
        rk4_integrate(rhs, np.zeros(2), (0.0, 1.0), step=0.1, stations=[2.0])


def test_rk4_adaptive():
    t, y = rk4_integrate(
        lambda t, y: 10 * np.cos(10 * t) * np.ones_like(y),
        np.zeros(1),
        (0.0, 1.0),
        step=0.5,
        tolerance=1e-10,
        stations=[1.0],
    )
    assert_allclose(y[-1], math.sin(10), atol=1e-8)


def test_rk4_blow_up():
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(IntegrationError) as info:
            rk4_integrate(lambda t, y: y**2, np.array([1.0]), (0.0, 2.0), step=0.01)
    assert info.value.t < 2.0
    assert np.all(np.isfinite(info.value.y))


def test_grid_csv_round_trip():
    values = np.array([[0.1, 1 / 3], [math.pi, -2e-300]])
    axes = [("x", -1.5, 0.25, 2), ("k", 0.0, 0.1, 2)]
    buf = io.StringIO()
    write_grid_csv(buf, values, axes)
    text = buf.getvalue()
    assert text.splitlines()[0] == "# axis x: -1.5,0.25,2"
    buf.seek(0)
    read, read_axes = read_grid_csv(buf)
    assert np.array_equal(read, values)
    assert read_axes == axes


def test_grid_csv_needs_2d():
    with pytest.raises(ValueError):
        write_grid_csv(io.StringIO(), np.zeros(3), [("x", 0.0, 1.0, 3)])


def test_deposit_gaussian_conserves_charge():
    x0, dx, n = -5.0, 0.05, 201
    positions = np.array([-1.0, 0.0, 1.23])
    charges = np.array([1.0, 2.0, 0.5])
    out = deposit_gaussian(x0, dx, n, positions, charges, 2 * dx)
    assert_allclose(out.sum() * dx, charges.sum(), rtol=1e-5)
    x = x0 + dx * np.arange(n)
    assert x[np.argmax(out)] == pytest.approx(0.0)
