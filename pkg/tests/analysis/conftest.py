import math

import pytest

from semiclassical_waves import LensLike


@pytest.fixture(scope="module")
def focusing_beam():
    # L/zR = 0.5, the beam narrows to w0/2 at z = πL/2.
    return LensLike(k0=1000, L=1, L_over_zR=0.5, log=None, show_progress=False)


@pytest.fixture(scope="module")
def offset_beam():
    return LensLike(
        k0=1000, L=1, L_over_zR=0.5, x0=0.5 * math.sqrt(0.004), log=None, show_progress=False
    )


@pytest.fixture(scope="module")
def defocusing_beam():
    # L/zR = 2, the beam widens to 2·w0 at z = πL/2, so the grid needs
    # more points to keep 16 cells across the launch width.
    return LensLike(
        k0=1000, L=1, L_over_zR=2.0, n_x=512, log=None, show_progress=False
    )


@pytest.fixture(scope="module")
def wide_beam():
    # A wider domain refines the wavevector spacing of the Wigner grid.
    return LensLike(
        k0=1000,
        L=1,
        L_over_zR=0.5,
        n_x=512,
        x_extent=12.0,
        log=None,
        show_progress=False,
    )


@pytest.fixture(scope="module")
def tilted_beam():
    # Tilted by about w0/2L, the center swings out to ±0.03 and crosses
    # the axis at z = πL.
    return LensLike(
        k0=1000, L=1, L_over_zR=0.5, theta0=0.03, log=None, show_progress=False
    )
