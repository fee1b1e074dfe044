import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from semiclassical_waves.cgo import (
    GaussianBeamState,
    beam_path,
    beam_states,
    cgo_boundary_solve,
    cgo_residuals,
    propagate_beam,
    ray_matrix,
    reconstruct_field,
)
from semiclassical_waves.oracle import (
    LensLikeScenario,
    analytic_intensity,
    analytic_width,
)
from semiclassical_waves.symbols import (
    MediumParameters,
    free_space,
    helmholtz_lenslike,
    paraxial_oscillator,
)
from semiclassical_waves.util import (
    EvanescentBranchError,
    InputError,
    ParaxialValidityWarning,
    ResolutionError,
)
from semiclassical_waves.wigner import weyl_residual

K0 = 1000.0
MEDIUM = MediumParameters(k0=K0, L=1.0)


def launch(ratio=0.5, x0_over_w0=0.0):
    s = LensLikeScenario.from_ratio(K0, 1.0, ratio, x0_over_w0=x0_over_w0)
    return s, GaussianBeamState.launch(s.w0, x0=s.x0, u0=s.u0)


def test_launch_state():
    state = GaussianBeamState.launch(0.1, x0=0.02, u0=2.0)
    assert state.z == 0.0
    assert state.R_inv == 0.0
    assert state.amp2 == 4.0
    assert state.inverse_q(K0) == pytest.approx(complex(0, 2 / (K0 * 0.01)))


def test_bad_state():
    with pytest.raises(ValueError):
        GaussianBeamState.launch(0.0)
    with pytest.raises(InputError):
        GaussianBeamState(z=0.0, xc=math.inf, theta=0.0, w=1.0, R_inv=0.0, amp2=1.0)


@pytest.mark.parametrize("dz", [0.3, 1.0, math.pi / 2, 4.0])
def test_ray_matrix_is_symplectic(dz):
    assert_allclose(np.linalg.det(ray_matrix(MEDIUM, dz)), 1.0)
    free = ray_matrix(MediumParameters(k0=K0, L=math.inf), dz)
    assert_allclose(free, [[1.0, dz], [0.0, 1.0]])


@pytest.mark.parametrize("ratio", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("method", ["abcd", "ode"])
def test_width_law(ratio, method):
    s, s0 = launch(ratio)
    z = np.linspace(0, 2 * math.pi, 25)
    states = beam_states(s.medium, s0, z, method=method)
    assert_allclose([st.w for st in states], analytic_width(s, z), rtol=1e-6)


def test_focus_to_half_width():
    s, s0 = launch(0.5)
    state = propagate_beam(s.medium, s0, math.pi / 2)
    assert_allclose(state.w, s.w0 / 2)
    assert_allclose(state.R_inv, 0.0, atol=1e-12)
    assert_allclose(state.amp2, 2 * s0.amp2)


def test_homogeneous_width_law():
    medium = MediumParameters(k0=K0, L=math.inf)
    s0 = GaussianBeamState.launch(0.05)
    zR = medium.rayleigh_range(0.05)
    for method in ("abcd", "ode"):
        state = propagate_beam(medium, s0, zR, method=method)
        assert_allclose(state.w, 0.05 * math.sqrt(2), rtol=1e-8)
        assert_allclose(state.R_inv, 1 / (2 * zR), rtol=1e-6)


def test_center_ray():
    s, s0 = launch(0.5, x0_over_w0=1.5)
    z = np.array([0.5, 1.0, 2.0])
    states = beam_states(s.medium, s0, z)
    assert_allclose([st.xc for st in states], s.x0 * np.cos(z))
    assert_allclose([st.theta for st in states], -s.x0 * np.sin(z))


def test_ode_matches_abcd():
    s, s0 = launch(0.5, x0_over_w0=1.0)
    z = [0.5, 1.0, 1.5]
    abcd = beam_states(s.medium, s0, z, method="abcd")
    ode = beam_states(s.medium, s0, z, method="ode")
    for a, b in zip(abcd, ode):
        assert_allclose(b.w, a.w, rtol=1e-8)
        assert_allclose(b.xc, a.xc, atol=1e-10)
        assert_allclose(b.R_inv, a.R_inv, atol=1e-8)
        assert_allclose(b.amp2, a.amp2, rtol=1e-8)
        assert_allclose(b.S_axis, a.S_axis, rtol=1e-9)
        assert_allclose(b.gouy, a.gouy, atol=1e-8)


def test_gouy_phase_at_focus():
    s, s0 = launch(0.5)
    state = propagate_beam(s.medium, s0, math.pi / 2)
    assert_allclose(state.gouy, -math.pi / 4)


def test_power_is_conserved():
    s, s0 = launch(2.0)
    for state in beam_states(s.medium, s0, np.linspace(0, 6, 13), method="ode"):
        assert_allclose(state.amp2 * state.w, s0.amp2 * s0.w, rtol=1e-8)


def test_backward_propagation():
    s, s0 = launch(0.5, x0_over_w0=1.0)
    there = propagate_beam(s.medium, s0, 1.3)
    back = propagate_beam(s.medium, there, 0.0)
    assert_allclose([back.w, back.xc, back.R_inv], [s0.w, s0.xc, s0.R_inv], atol=1e-12)
    states = beam_states(s.medium, there, [0.0, 1.3, 2.0], method="ode")
    assert_allclose(states[0].w, s0.w, rtol=1e-8)
    assert states[1] == there


def test_unknown_method():
    s, s0 = launch()
    with pytest.raises(ValueError):
        propagate_beam(s.medium, s0, 1.0, method="euler")


def test_paraxial_warning():
    with pytest.warns(ParaxialValidityWarning):
        propagate_beam(MEDIUM, GaussianBeamState.launch(0.5), 1.0)


def test_beam_path():
    s, s0 = launch()
    df = beam_path(s.medium, s0, [0.0, 1.0])
    assert list(df.columns) == [
        "z",
        "xc",
        "theta",
        "w",
        "R_inv",
        "amp2",
        "S_axis",
        "gouy",
    ]
    assert df["w"].iloc[0] == s.w0


def test_reconstructed_intensity():
    s, s0 = launch(0.5, x0_over_w0=1.0)
    x = np.linspace(-6, 6, 241) * s.w0
    z = np.linspace(0, 2 * math.pi, 40)
    fields = reconstruct_field(beam_states(s.medium, s0, z), x, K0)
    expected = analytic_intensity(s, x[:, None], z[None, :])
    assert_allclose(fields.intensity, expected, rtol=1e-10, atol=1e-14)
    assert_allclose(fields.slice_field(3).intensity, fields.intensity[:, 3])


def test_reconstruct_gouy_flag():
    s, s0 = launch()
    x = np.linspace(-6, 6, 241) * s.w0
    states = beam_states(s.medium, s0, [0.0, math.pi / 2])
    plain = reconstruct_field(states, x, K0)
    shifted = reconstruct_field(states, x, K0, gouy=True)
    assert_allclose(shifted.S[:, 1] - plain.S[:, 1], -math.pi / 4)


def test_reconstruct_resolution():
    s, s0 = launch()
    x = np.linspace(-6, 6, 21) * s.w0
    with pytest.raises(ResolutionError):
        reconstruct_field([s0], x, K0)
    with pytest.raises(InputError):
        reconstruct_field([], x, K0)


def test_to_field_and_dataset():
    s, s0 = launch()
    x = np.linspace(-6, 6, 241) * s.w0
    z = np.linspace(0, 1, 11)
    fields = reconstruct_field(beam_states(s.medium, s0, z), x, K0)
    field = fields.to_field(K0)
    assert field.labels == ("x", "z")
    assert field.carrier == (0.0, K0)
    assert_allclose(np.abs(field.physical_values()) ** 2, fields.intensity)
    ds = fields.to_dataset()
    assert set(ds.data_vars) == {"S", "phi", "u2", "intensity"}
    assert ds["intensity"].dims == ("x", "z")


@pytest.mark.parametrize("ratio", [0.5, 2.0])
def test_paraxial_residuals_vanish(ratio):
    s, s0 = launch(ratio, x0_over_w0=1.0)
    x = np.linspace(-6, 6, 257) * s.w0 * max(1.0, ratio)
    z = np.linspace(0, math.pi, 800)
    fields = reconstruct_field(beam_states(s.medium, s0, z), x, K0)
    D = paraxial_oscillator(s.medium)
    res = cgo_residuals(fields, D)
    assert res.scale == K0
    assert res.eikonal_max / res.scale < 1e-4
    assert res.antieikonal_max < 1e-2
    assert res.transport_max / s0.amp2 < 1e-3
    assert set(res.to_dict()) >= {"eikonal_l2", "antieikonal_l2", "transport_l2"}


def test_residuals_bad_input():
    s, s0 = launch()
    x = np.linspace(-6, 6, 241) * s.w0
    fields = reconstruct_field(beam_states(s.medium, s0, [0.0, 0.5, 1.0]), x, K0)
    with pytest.raises(InputError):
        cgo_residuals(fields, free_space(s.medium, dim=1))
    with pytest.raises(ValueError):
        cgo_residuals(fields, paraxial_oscillator(s.medium), frame=0.5)


def test_boundary_solve_helmholtz():
    w0 = LensLikeScenario.from_ratio(K0, 1.0, 0.5).w0
    x = np.linspace(-3, 3, 61) * w0
    D = helmholtz_lenslike(MEDIUM)
    b = cgo_boundary_solve(D, x, np.zeros_like(x), (x / w0) ** 2)
    kpp = 2 * x / w0**2
    assert_allclose(b.k[:, 0], 0.0, atol=1e-9)
    assert_allclose(b.k_imag[:, 0], kpp, rtol=1e-9, atol=1e-9)
    assert_allclose(b.k[:, 1], np.sqrt(K0**2 * (1 - x**2) + kpp**2), rtol=1e-10)
    assert_allclose(b.k_imag[:, 1], 0.0, atol=1e-9)
    back = cgo_boundary_solve(D, x, np.zeros_like(x), (x / w0) ** 2, "regressive")
    assert_allclose(back.k[:, 1], -b.k[:, 1], rtol=1e-10)


def test_boundary_solve_tilted():
    x = np.linspace(-0.1, 0.1, 41)
    D = helmholtz_lenslike(MEDIUM)
    kx = 100.0
    b = cgo_boundary_solve(D, x, kx * x, (x / 0.05) ** 2)
    X = b.k[:, 0] / b.k[:, 1]
    assert_allclose(b.k_imag[:, 1], -b.k_imag[:, 0] * X, rtol=1e-10)


def test_boundary_solve_evanescent():
    x = np.linspace(-0.1, 0.1, 11)
    D = helmholtz_lenslike(MEDIUM)
    with pytest.raises(EvanescentBranchError):
        cgo_boundary_solve(D, x, 2 * K0 * x, np.zeros_like(x))


def test_residuals_converge_in_z():
    s, s0 = launch(2.0)
    x = np.linspace(-12, 12, 257) * s.w0
    D = paraxial_oscillator(s.medium)
    errors = []
    for n_z in (200, 400):
        z = np.linspace(0, math.pi, n_z)
        fields = reconstruct_field(beam_states(s.medium, s0, z), x, K0)
        errors.append(cgo_residuals(fields, D).eikonal_max)
    assert errors[0] / errors[1] > 3


def test_ode_tolerance_refines_coarse_steps():
    s, s0 = launch(0.5, x0_over_w0=1.0)
    z = [1.0, math.pi]
    exact = beam_states(s.medium, s0, z, method="abcd")

    def error(states):
        return max(
            abs(a.w - e.w) / e.w + abs(a.xc - e.xc) / s.w0 for a, e in zip(states, exact)
        )

    coarse = beam_states(s.medium, s0, z, method="ode", step=0.5)
    refined = beam_states(s.medium, s0, z, method="ode", step=0.5, tolerance=1e-12)
    assert error(coarse) > 1e-6
    assert error(refined) < 1e-2 * error(coarse)


def test_helmholtz_residuals_shrink_with_wavelength():
    # At fixed L/zR the beam parameter 1/(k0·w0) halves when k0 doubles.
    errors = []
    for k0 in (1000.0, 2000.0):
        s = LensLikeScenario.from_ratio(k0, 1.0, 0.5)
        s0 = GaussianBeamState.launch(s.w0)
        x = np.linspace(-4, 4, 257) * s.w0
        z = np.linspace(0, math.pi, 2001)
        fields = reconstruct_field(beam_states(s.medium, s0, z), x, k0)
        res = cgo_residuals(fields, helmholtz_lenslike(s.medium))
        errors.append(res.eikonal_max / res.scale)
    assert math.log2(errors[0] / errors[1]) >= 1.7


def test_weyl_residual_of_reconstructed_beam():
    errors = []
    for k0 in (1000.0, 2000.0):
        s = LensLikeScenario.from_ratio(k0, 1.0, 0.5)
        s0 = GaussianBeamState.launch(s.w0)
        x = np.linspace(-8, 8, 320, endpoint=False) * s.w0
        # The carrier-free field repeats every half period.
        z = np.linspace(0, math.pi, 256, endpoint=False)
        fields = reconstruct_field(beam_states(s.medium, s0, z), x, k0)
        field = replace(fields.to_field(k0), periodic=(False, True))
        errors.append(weyl_residual(paraxial_oscillator(s.medium), field))
    assert errors[1] < errors[0]
    assert math.log2(errors[0] / errors[1]) >= 0.8
