import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import trapezoid

from semiclassical_waves.kinetic import (
    PhaseSpacePoint,
    RayBundle,
    advect_wigner,
    advect_wigner_stations,
    boundary_data,
    default_step,
    launch_from_wigner,
    launch_rays,
    project_intensity,
    solve_dispersion_normal,
    trace_ray,
    trace_rays,
)
from semiclassical_waves.oracle import LensLikeScenario, analytic_intensity
from semiclassical_waves.symbols import (
    MediumParameters,
    helmholtz_lenslike,
    paraxial_oscillator,
    polynomial_symbol,
)
from semiclassical_waves.util import (
    CharacteristicSurfaceError,
    CoverageWarning,
    EvanescentBranchError,
    InputError,
)
from semiclassical_waves.wigner import marginal_intensity, wigner_transform

K0 = 1000.0
MEDIUM = MediumParameters(k0=K0, L=1.0)


@pytest.fixture(scope="module")
def beam():
    return LensLikeScenario.from_ratio(K0, 1.0, 0.5)


@pytest.fixture(scope="module")
def launch_wigner(beam):
    x = np.linspace(-12, 12, 256, endpoint=False) * beam.w0
    return wigner_transform(beam.launch_field(x))


STATIONS = [math.pi / 4, math.pi / 2, 2.0, math.pi]


@pytest.fixture(scope="module")
def advected(launch_wigner):
    grids = advect_wigner_stations(paraxial_oscillator(MEDIUM), launch_wigner, STATIONS)
    return dict(zip(STATIONS, grids))


def relative_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_phase_space_point():
    p = PhaseSpacePoint(x=[0.1, 0.0], k=[0.0, 5.0])
    assert p.dim == 2
    assert p.x == (0.1, 0.0)
    with pytest.raises(InputError):
        PhaseSpacePoint(x=[0.0], k=[1.0, 2.0])
    with pytest.raises(InputError):
        PhaseSpacePoint(x=[math.nan], k=[1.0])


def test_solve_dispersion_normal():
    D = helmholtz_lenslike(MEDIUM)
    x, kx = [0.1, 0.0], 20.0
    expected = math.sqrt(K0**2 * (1 - 0.01) - kx**2)
    assert_allclose(solve_dispersion_normal(D, x, [kx]), expected, rtol=1e-12)
    assert_allclose(
        solve_dispersion_normal(D, x, [kx], branch="regressive"), -expected, rtol=1e-12
    )


def test_solve_dispersion_normal_paraxial():
    D = paraxial_oscillator(MEDIUM)
    kz = solve_dispersion_normal(D, [0.1, 0.0], [10.0])
    assert_allclose(kz, K0 - 10.0**2 / (2 * K0) - K0 * 0.01 / 2)


def test_solve_dispersion_normal_errors():
    D = helmholtz_lenslike(MEDIUM)
    with pytest.raises(EvanescentBranchError):
        solve_dispersion_normal(D, [0.0, 0.0], [2 * K0])
    with pytest.raises(CharacteristicSurfaceError):
        solve_dispersion_normal(D, [0.0, 0.0], [K0])
    with pytest.raises(InputError):
        solve_dispersion_normal(D, [0.0], [0.0])
    with pytest.raises(ValueError):
        solve_dispersion_normal(D, [0.0, 0.0], [0.0], branch="sideways")


def test_oscillator_ray():
    D = paraxial_oscillator(MEDIUM)
    x0 = 0.05
    p0 = PhaseSpacePoint(x=[x0, 0.0], k=[0.0, K0 - K0 * x0**2 / 2])
    z = np.linspace(0, math.pi, 7)
    ray = trace_ray(D, p0, (0.0, math.pi), parametrization="z", stations=z)
    assert_allclose(ray.parameter, z)
    assert_allclose(ray.x[:, 0], x0 * np.cos(z), atol=1e-9)
    assert_allclose(ray.x[:, 1], z, atol=1e-12)
    assert_allclose(ray.k[:, 0], -K0 * x0 * np.sin(z), atol=1e-6)
    assert ray.dispersion_residual < 1e-9 * D.scale
    assert ray.weight == 1.0


def test_helmholtz_ray_stays_on_shell():
    D = helmholtz_lenslike(MEDIUM)
    x = [0.02, 0.0]
    kx = 5.0
    kz = solve_dispersion_normal(D, x, [kx])
    ray = trace_ray(D, PhaseSpacePoint(x=x, k=[kx, kz]), (0.0, 4e-3))
    assert ray.dispersion_residual < 1e-9 * D.scale
    # Progressive rays move towards negative z in τ: dz/dτ = −2kz.
    assert ray.x[-1, 1] < 0
    df = ray.to_dataframe()
    assert list(df.columns) == ["tau", "x_0", "x_1", "k_0", "k_1", "weight", "residual"]


def test_ray_off_shell():
    D = helmholtz_lenslike(MEDIUM)
    with pytest.raises(InputError):
        trace_ray(D, PhaseSpacePoint(x=[0.0, 0.0], k=[0.0, 0.5 * K0]), (0.0, 1.0))


def test_ray_transport_weight():
    gamma = 0.3
    D = polynomial_symbol(
        "lossy_oscillator",
        {
            ((0, 0), (0, 1)): 1.0,
            ((0, 0), (0, 0)): -K0,
            ((0, 0), (2, 0)): 1 / (2 * K0),
            ((2, 0), (0, 0)): K0 / 2,
        },
        imag_part=lambda x, k: np.full(np.broadcast_shapes(x.shape, k.shape)[:-1], gamma),
        length_scale=1.0,
        k_scale=K0,
    )
    p0 = PhaseSpacePoint(x=[0.0, 0.0], k=[0.0, K0])
    ray = trace_ray(D, p0, (0.0, 1.0), parametrization="z", stations=[0.5, 1.0])
    assert_allclose(ray.weights, np.exp(2 * gamma * np.array([0.0, 0.5, 1.0])))


def test_default_step():
    D = paraxial_oscillator(MEDIUM)
    assert default_step(D, "z") == pytest.approx(1 / 200)
    H = helmholtz_lenslike(MEDIUM)
    step = default_step(H, "tau", k=np.array([[0.0, K0]]), x=np.array([[0.0, 0.0]]))
    assert step == pytest.approx(1 / 200 / (2 * K0))


def test_advect_at_launch(launch_wigner):
    D = paraxial_oscillator(MEDIUM)
    W = advect_wigner(D, launch_wigner, 0.0)
    assert_allclose(W.values, launch_wigner.values)


@pytest.mark.parametrize("z", STATIONS)
def test_advect_matches_analytic_intensity(beam, advected, z):
    W = advected[z]
    expected = analytic_intensity(beam, W.x, z)
    assert relative_l2(marginal_intensity(W), expected) < 1e-2


def test_advect_half_period_restores_intensity(launch_wigner, advected):
    expected = marginal_intensity(launch_wigner)
    assert relative_l2(marginal_intensity(advected[math.pi]), expected) < 1e-2


def test_advect_stations(launch_wigner, advected):
    D = paraxial_oscillator(MEDIUM)
    grids = advect_wigner_stations(D, launch_wigner, [math.pi / 2, 0.0])
    assert_allclose(grids[1].values, launch_wigner.values)
    assert_allclose(grids[0].values, advected[math.pi / 2].values, rtol=1e-6, atol=1e-9)
    with pytest.raises(ValueError):
        advect_wigner_stations(D, launch_wigner, [-1.0])


def test_advect_needs_2d_symbol(launch_wigner):
    D = polynomial_symbol("k2", {((0,), (2,)): 1.0})
    with pytest.raises(InputError):
        advect_wigner(D, launch_wigner, 1.0)


def test_boundary_data(beam):
    x = np.linspace(-4, 4, 81) * beam.w0
    D = paraxial_oscillator(MEDIUM)
    b = boundary_data(D, x, np.zeros_like(x), (x / beam.w0) ** 2)
    assert_allclose(b.k_par, 0.0, atol=1e-9)
    assert_allclose(b.weight, np.exp(-2 * (x / beam.w0) ** 2))
    assert_allclose(b.k_normal["progressive"], K0 * (1 - x**2 / 2))
    assert b.propagating("progressive").all()


def test_go_rays_focus(beam):
    x = np.linspace(-4, 4, 41) * beam.w0
    D = paraxial_oscillator(MEDIUM)
    b = boundary_data(D, x, np.zeros_like(x), (x / beam.w0) ** 2)
    z = [0.0, math.pi / 4, math.pi / 2]
    (bundle,) = launch_rays(D, b, z)
    assert len(bundle.rays) == 41
    assert_allclose(bundle.positions(1), x * math.cos(math.pi / 4), atol=1e-8)
    # Geometrical optics collapses a collimated launch onto the axis.
    assert_allclose(bundle.positions(2), 0.0, atol=1e-8)
    assert_allclose(bundle.masses.sum(), trapezoid(b.weight, x), rtol=1e-2)


def test_go_rays_two_branches(beam):
    x = np.linspace(-4, 4, 21) * beam.w0
    D = helmholtz_lenslike(MEDIUM)
    b = boundary_data(
        D, x, np.zeros_like(x), (x / beam.w0) ** 2, branches=("progressive", "regressive")
    )
    bundles = launch_rays(D, b, [0.0, 0.5])
    assert [bb.branches for bb in bundles] == [("progressive",), ("regressive",)]
    total = sum(bb.masses.sum() for bb in bundles)
    assert_allclose(total, (b.weight * np.gradient(x)).sum())
    assert_allclose(bundles[0].masses, bundles[1].masses)
    assert_allclose(bundles[0].positions(1), bundles[1].positions(1), atol=1e-6)


def test_launch_from_wigner(beam, launch_wigner):
    D = paraxial_oscillator(MEDIUM)
    bundle = launch_from_wigner(D, launch_wigner, [0.0, 0.5])
    assert_allclose(bundle.masses.sum(), beam.power, rtol=1e-3)
    assert_allclose(bundle.charges(0), bundle.masses)


def test_launch_from_wigner_sampled(launch_wigner):
    D = paraxial_oscillator(MEDIUM)
    a = launch_from_wigner(D, launch_wigner, [0.0, 0.5], n_rays=50, random_seed=3)
    b = launch_from_wigner(D, launch_wigner, [0.0, 0.5], n_rays=50, random_seed=3)
    assert len(a.rays) == 50
    assert_allclose(a.positions(1), b.positions(1))
    assert_allclose(a.masses, b.masses)


def test_project_intensity(beam, launch_wigner):
    assert_allclose(project_intensity(launch_wigner), marginal_intensity(launch_wigner))
    D = paraxial_oscillator(MEDIUM)
    bundle = launch_from_wigner(D, launch_wigner, [0.0, 0.5])
    x = launch_wigner.x
    deposited = project_intensity(bundle, x, station=1)
    dx = x[1] - x[0]
    assert_allclose(deposited.sum() * dx, bundle.charges(1).sum(), rtol=1e-5)
    both = project_intensity([bundle, bundle], x, station=1)
    assert_allclose(both, 2 * deposited)
    with pytest.raises(InputError):
        project_intensity(bundle)


def test_ray_bundle_validation():
    with pytest.raises(InputError):
        RayBundle(rays=(), masses=np.ones(2))


@pytest.mark.parametrize("symbol", [paraxial_oscillator, helmholtz_lenslike])
def test_ray_flow_preserves_phase_space_area(symbol):
    D = symbol(MEDIUM)
    x, kx = 0.03, 20.0
    hx, hk = 1e-5, 1e-2
    starts = [(x + hx, kx), (x - hx, kx), (x, kx + hk), (x, kx - hk)]
    points = np.array([[s[0], 0.0] for s in starts])
    k = np.array(
        [[s[1], solve_dispersion_normal(D, p, [s[1]])] for s, p in zip(starts, points)]
    )
    z = [math.pi / 3, 2 * math.pi]
    rays = trace_rays(
        D, points, k, (0.0, z[-1]), parametrization="z", step=1e-3, stations=z
    )
    for j in range(1, len(z) + 1):
        end = np.array([[r.x[j, 0], r.k[j, 0]] for r in rays])
        jacobian = np.column_stack(
            [(end[0] - end[1]) / (2 * hx), (end[2] - end[3]) / (2 * hk)]
        )
        assert abs(np.linalg.det(jacobian) - 1) < 1e-8


@pytest.mark.parametrize("x0_over_w0", [0.0, 0.5])
def test_advect_peak_error_per_station(x0_over_w0):
    beam = LensLikeScenario.from_ratio(K0, 1.0, 0.5, x0_over_w0=x0_over_w0)
    x = np.linspace(-12, 12, 256, endpoint=False) * beam.w0
    W0 = wigner_transform(beam.launch_field(x))
    grids = advect_wigner_stations(paraxial_oscillator(MEDIUM), W0, STATIONS)
    for z, W in zip(STATIONS, grids):
        expected = analytic_intensity(beam, W.x, z)
        error = np.max(np.abs(marginal_intensity(W) - expected)) / expected.max()
        assert error < 1e-2


def test_advect_conserves_projected_power(launch_wigner, advected):
    dx = launch_wigner.dx
    power = project_intensity(launch_wigner).sum() * dx
    for z in STATIONS:
        assert_allclose(project_intensity(advected[z]).sum() * dx, power, rtol=1e-3)


def test_ray_projection_conserves_power(launch_wigner):
    D = paraxial_oscillator(MEDIUM)
    bundle = launch_from_wigner(D, launch_wigner, [0.0] + STATIONS)
    x = launch_wigner.x
    dx = x[1] - x[0]
    charge = bundle.charges(0).sum()
    for j in range(len(STATIONS) + 1):
        assert_allclose(bundle.charges(j).sum(), charge, rtol=1e-12)
        assert_allclose(project_intensity(bundle, x, station=j).sum() * dx, charge, rtol=1e-3)


def test_advect_full_period_returns_launch(launch_wigner):
    W = advect_wigner(paraxial_oscillator(MEDIUM), launch_wigner, 2 * math.pi)
    peak = np.abs(launch_wigner.values).max()
    assert_allclose(W.values, launch_wigner.values, atol=1e-6 * peak)


def test_advect_maps_launch_center():
    beam = LensLikeScenario.from_ratio(K0, 1.0, 0.5, x0_over_w0=1.0)
    x = np.linspace(-12, 12, 256, endpoint=False) * beam.w0
    W = advect_wigner(
        paraxial_oscillator(MEDIUM), wigner_transform(beam.launch_field(x)), math.pi / 2
    )
    i, j = np.unravel_index(np.argmax(W.values), W.values.shape)
    # A quarter period carries (x0, 0) to (0, −k0·x0/L).
    assert abs(W.x[i]) <= W.dx
    assert abs(W.k[j] + K0 * beam.x0) <= W.dk


def test_advect_coverage_warning(launch_wigner):
    D = paraxial_oscillator(MEDIUM)
    with pytest.warns(CoverageWarning, match="fall outside the launch grid"):
        W = advect_wigner(D, launch_wigner, math.pi / 4)
    assert W.uncovered_nodes > 0
