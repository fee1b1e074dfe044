import math

import pytest

from semiclassical_waves.config import ScenarioConfig, parse_config
from semiclassical_waves.util import ConfigError


def test_builtin_default():
    config = ScenarioConfig.builtin("default")
    assert config.scenario.name == "default"
    assert config.scenario.pipeline == "intensity"
    assert config.medium.k0 == 1000.0
    assert config.grid.n_x == 256
    assert config.launch.x0_over_w0 == (0.0,)
    assert config.methods.symbol == "paraxial_oscillator"


def test_builtin_focal_spots():
    config = ScenarioConfig.builtin("focal-spots")
    assert config.scenario.pipeline == "focal-spots"
    assert config.launch.x0_over_w0 == (0.0, 0.5)
    assert config.methods.methods == ("kinetic", "cgo", "oracle", "split-step")
    offset = config.launch_scenario(0.5)
    assert offset.x0 == pytest.approx(0.5 * offset.w0)


def test_builtin_widths():
    assert ScenarioConfig.builtin("widths").scenario.pipeline == "widths"


def test_builtin_unknown():
    with pytest.raises(ConfigError):
        ScenarioConfig.builtin("no-such-scenario")


def test_defaults():
    config = ScenarioConfig.from_string("")
    assert config == ScenarioConfig()
    assert config.output.seed == 42
    assert config.output.heatmaps is True


def test_derived_width_and_ratios():
    config = parse_config("[medium]\nk0 = 1000\nL = 2\n[launch]\nL_over_zR = 0.5\n")
    w0 = math.sqrt(2 * 2 / (1000 * 0.5))
    assert config.w0 == pytest.approx(w0)
    ratios = config.ratios()
    assert ratios["kappa"] == pytest.approx(2000.0)
    assert ratios["epsilon"] == pytest.approx(1 / 2000)
    assert ratios["epsilon_tilde"] == pytest.approx(1 / (1000 * w0))
    assert ratios["w_over_L"] == pytest.approx(w0 / 2)
    assert ratios["L_over_zR"] == pytest.approx(0.5)


def test_explicit_width_wins():
    config = parse_config("[launch]\nw0 = 0.05\nL_over_zR = 3\n")
    assert config.w0 == 0.05


def test_internal_units():
    config = parse_config("[medium]\nk0 = 1000\nL = 2\n")
    assert config.normalization.length == 2.0
    medium = config.internal_medium
    assert medium.L == 1.0
    assert medium.k0 == 2000.0
    s = config.launch_scenario()
    assert s.medium == medium
    assert s.L_over_zR == pytest.approx(0.5)


def test_homogeneous_normalization():
    config = parse_config("[medium]\nL = inf\n[launch]\nw0 = 0.1\n")
    assert config.normalization.length == 0.1
    assert config.internal_medium.homogeneous
    assert config.internal_medium.k0 == pytest.approx(100.0)


def test_normalization_round_trip():
    norm = ScenarioConfig.builtin("default").normalization
    assert norm.to_user_length(norm.to_internal_length(0.3)) == pytest.approx(0.3)
    assert norm.to_user_wavevector(norm.to_internal_wavevector(7.0)) == pytest.approx(7.0)


def test_branch_share():
    config = parse_config("[methods]\nbranches = progressive, regressive\n")
    assert config.methods.branches == ("progressive", "regressive")
    assert config.branch_share == 0.5
    config = parse_config(
        "[methods]\nbranches = progressive, regressive\nbranch_share = 0.3\n"
    )
    assert config.branch_share == 0.3


def test_with_overrides():
    config = ScenarioConfig.builtin("default").with_overrides(directory="out", seed=7)
    assert config.output.directory == "out"
    assert config.output.seed == 7
    assert config.with_overrides() == config


def test_from_file(tmp_path):
    path = tmp_path / "beam.cfg"
    path.write_text("[grid]\nn_x = 512  # finer\n")
    assert ScenarioConfig.from_file(str(path)).grid.n_x == 512


def test_boolean_values():
    assert parse_config("[output]\nheatmaps = no\n").output.heatmaps is False
    with pytest.raises(ConfigError):
        parse_config("[output]\nheatmaps = maybe\n")


@pytest.mark.parametrize(
    "text,key,line",
    [
        ("[medium]\nk0 = 1000\n[colour]\nhue = 3\n", "colour", 3),
        ("[grid]\nn_x = 256\nn_y = 3\n", "grid.n_y", 3),
        ("[medium]\nk0 = fast\n", "medium.k0", 2),
        ("[medium]\n\nL = nan\n", "medium.L", 3),
        ("[medium]\nL = -1\n", "medium.L", 2),
        ("[grid]\nn_x = 100\n", "grid.n_x", 2),
        ("[grid]\nn_x = 0\n", "grid.n_x", 2),
        ("[grid]\nn_k =\n", "grid.n_k", 2),
        ("[grid]\nn_z = 0\n", "grid.n_z", 2),
        ("[scenario]\npipeline = everything\n", "scenario.pipeline", 2),
        ("[methods]\nbranches = progressive, sideways\n", "methods.branches", 2),
        ("[methods]\nmethods = kinetic,\n", "methods.methods", 2),
        ("[methods]\nsymbol = vacuum\n", "methods.symbol", 2),
        ("[methods]\ncgo_method = euler\n", "methods.cgo_method", 2),
        ("[methods]\nbranch_share = 2\n", "methods.branch_share", 2),
        ("[launch]\nu0 = 0\n", "launch.u0", 2),
        ("[launch]\ns0_profile = curved\n", "launch.s0_profile", 2),
        ("[launch]\ntheta0 = 0.01\n", "launch.theta0", 2),
        ("[launch]\ns0_profile = tilted\ntheta0 = inf\n", "launch.theta0", 3),
        ("[launch]\nphi0_profile = gaussian\n", "launch.phi0_profile", 2),
        ("[tolerances]\nwidth_law = 0\n", "tolerances.width_law", 2),
        ("[truncation]\nmoment_order = -1\n", "truncation.moment_order", 2),
    ],
)
def test_validation_errors(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key
    assert info.value.line == line
    assert repr(key) in str(info.value)


def test_width_needed_for_homogeneous_medium():
    with pytest.raises(ConfigError) as info:
        parse_config("[medium]\nL = inf\n")
    assert info.value.key == "launch.L_over_zR"


def test_malformed_file():
    with pytest.raises(ConfigError):
        parse_config("k0 = 1000\n")


def test_tilted_launch():
    config = parse_config(
        "[medium]\nk0 = 1000\nL = 2\n[launch]\ns0_profile = tilted\ntheta0 = 0.01\n"
    )
    s = config.launch_scenario(1.0)
    # The tilt is an angle, the same in user and internal units.
    assert s.theta0 == 0.01
    assert s.k0_theta0 == pytest.approx(2000.0 * 0.01)
    assert s.x0 == pytest.approx(s.w0)
    assert config.launch_scenario().theta0 == 0.01
    assert parse_config("").launch_scenario().theta0 == 0.0
