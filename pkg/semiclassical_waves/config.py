"""Scenario configuration files.

A scenario file holds flat ``key = value`` lines under ``[section]``
headers, for example::

    [scenario]
    name = focal-spots
    pipeline = focal-spots

    [medium]
    k0 = 1000.0
    L = 1.0

Every key maps to a typed field of one of the section records below;
unknown keys and invalid values raise :class:`ConfigError` naming the key
and the line it was found on.
"""

import configparser
import math
import re
import typing
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from typing import Dict, Optional, Tuple

from .oracle import LensLikeScenario
from .symbols import BUILTIN_SYMBOLS, MediumParameters
from .util import ConfigError

PIPELINES = ("widths", "focal-spots", "intensity")
METHODS = ("kinetic", "cgo", "oracle", "split-step")
BRANCHES = ("progressive", "regressive")


@dataclass(frozen=True)
class ScenarioSection:
    name: str = "default"
    pipeline: str = "intensity"


@dataclass(frozen=True)
class MediumSection:
    k0: float = 1000.0
    L: float = 1.0
    n0: float = 1.0


@dataclass(frozen=True)
class LaunchSection:
    # Either w0 or L_over_zR fixes the launch width.
    w0: float = 0.0
    L_over_zR: float = 0.5
    x0_over_w0: Tuple[float, ...] = (0.0,)
    u0: float = 1.0
    theta0: float = 0.0
    # "tilted" launches S0 = k0·θ0·x; "flat" requires theta0 = 0.
    s0_profile: str = "flat"


@dataclass(frozen=True)
class GridSection:
    n_x: int = 256
    x_extent: float = 6.0
    n_k: int = 256
    n_z: int = 64
    z_periods: float = 1.0


@dataclass(frozen=True)
class MethodsSection:
    methods: Tuple[str, ...] = METHODS
    symbol: str = "paraxial_oscillator"
    cgo_method: str = "abcd"
    branches: Tuple[str, ...] = ("progressive",)
    branch_share: float = 0.0
    n_rays: int = 0
    split_step_per_length: int = 2000


@dataclass(frozen=True)
class TruncationSection:
    moment_order: int = 4
    series_order: int = 2


@dataclass(frozen=True)
class TolerancesSection:
    width_law: float = 1e-6
    kinetic_analytic: float = 1e-2
    kinetic_cgo: float = 1e-2
    splitstep_analytic: float = 1e-6
    go_focus: float = 1e-2
    constraint: float = 1e-9
    integrator: float = 1e-9


@dataclass(frozen=True)
class OutputSection:
    directory: str = "output"
    seed: int = 42
    heatmaps: bool = True


@dataclass(frozen=True)
class Normalization:
    """Conversion between user units and internal units, in which lengths
    are measured in units of ``length`` (L, or w0 for homogeneous media)."""

    length: float

    def to_internal_length(self, x):
        return x / self.length

    def to_internal_wavevector(self, k):
        return k * self.length

    def to_user_length(self, x):
        return x * self.length

    def to_user_wavevector(self, k):
        return k / self.length


SECTIONS = {
    "scenario": ScenarioSection,
    "medium": MediumSection,
    "launch": LaunchSection,
    "grid": GridSection,
    "methods": MethodsSection,
    "truncation": TruncationSection,
    "tolerances": TolerancesSection,
    "output": OutputSection,
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    medium: MediumSection = field(default_factory=MediumSection)
    launch: LaunchSection = field(default_factory=LaunchSection)
    grid: GridSection = field(default_factory=GridSection)
    methods: MethodsSection = field(default_factory=MethodsSection)
    truncation: TruncationSection = field(default_factory=TruncationSection)
    tolerances: TolerancesSection = field(default_factory=TolerancesSection)
    output: OutputSection = field(default_factory=OutputSection)

    @property
    def w0(self) -> float:
        """Launch width in user units."""
        if self.launch.w0 > 0:
            return self.launch.w0
        return math.sqrt(2 * self.medium.L / (self.medium.k0 * self.launch.L_over_zR))

    @property
    def normalization(self) -> Normalization:
        L = self.medium.L
        return Normalization(length=L if math.isfinite(L) else self.w0)

    @property
    def internal_medium(self) -> MediumParameters:
        norm = self.normalization
        return MediumParameters(
            k0=norm.to_internal_wavevector(self.medium.k0),
            L=norm.to_internal_length(self.medium.L),
            n0=self.medium.n0,
        )

    def launch_scenario(self, x0_over_w0: float = 0.0) -> LensLikeScenario:
        """The launch of one configured offset, in internal units."""
        medium = self.internal_medium
        w0 = self.normalization.to_internal_length(self.w0)
        return LensLikeScenario(
            medium=medium,
            w0=w0,
            x0=x0_over_w0 * w0,
            u0=self.launch.u0,
            theta0=self.launch.theta0,
        )

    @property
    def branch_share(self) -> float:
        if self.methods.branch_share > 0:
            return self.methods.branch_share
        return 1.0 / len(self.methods.branches)

    def ratios(self) -> Dict[str, float]:
        """Dimensionless parameters of the run."""
        k0, L, w0 = self.medium.k0, self.medium.L, self.w0
        zR = k0 * w0**2 / 2
        return dict(
            kappa=k0 * L,
            epsilon=1 / (k0 * L),
            epsilon_tilde=1 / (k0 * w0),
            w_over_L=w0 / L,
            L_over_zR=L / zR,
        )

    def with_overrides(
        self, directory: Optional[str] = None, seed: Optional[int] = None
    ) -> "ScenarioConfig":
        output = self.output
        if directory is not None:
            output = replace(output, directory=directory)
        if seed is not None:
            output = replace(output, seed=seed)
        return replace(self, output=output)

    @classmethod
    def from_string(cls, text: str) -> "ScenarioConfig":
        return parse_config(text)

    @classmethod
    def from_file(cls, path: str) -> "ScenarioConfig":
        with open(path) as f:
            return parse_config(f.read())

    @classmethod
    def builtin(cls, name: str) -> "ScenarioConfig":
        """Load one of the packaged scenario files by name."""
        try:
            text = (
                resources.files("semiclassical_waves")
                .joinpath("scenarios", f"{name}.cfg")
                .read_text()
            )
        except FileNotFoundError:
            raise ConfigError(f"Unknown built-in scenario {name!r}.", key=name) from None
        return parse_config(text)


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^#;\s=:][^=:]*?)\s*[=:]")


def _line_numbers(text: str) -> Dict[Tuple[str, Optional[str]], int]:
    lines: Dict[Tuple[str, Optional[str]], int] = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), number)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip()), number)
    return lines


def _convert(raw: str, annotation, key: str, line: Optional[int]):
    raw = raw.strip()
    if raw == "":
        raise ConfigError("Empty value.", key=key, line=line)
    try:
        if annotation is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if annotation in (int, float, str):
            return annotation(raw)
        if typing.get_origin(annotation) is tuple:
            item = typing.get_args(annotation)[0]
            parts = [p.strip() for p in raw.split(",")]
            if any(p == "" for p in parts):
                raise ValueError(raw)
            return tuple(item(p) for p in parts)
    except ValueError:
        raise ConfigError(
            f"Cannot parse {raw!r} as {getattr(annotation, '__name__', annotation)}.",
            key=key,
            line=line,
        ) from None
    raise ConfigError(f"Unsupported type {annotation!r}.", key=key, line=line)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario file.

    Raises
    ------
    ConfigError
        On syntax errors, unknown sections or keys, unparsable values and
        values outside their valid range.

    """
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None
    )
    # Keys are case-sensitive (L, k0).
    parser.optionxform = str  # type: ignore
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"Malformed scenario file: {exc.message}", line=line) from None
    lines = _line_numbers(text)

    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(
                f"Unknown section [{section}].",
                key=section,
                line=lines.get((section, None)),
            )
        record = SECTIONS[section]
        hints = typing.get_type_hints(record)
        kwargs = {}
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in hints:
                raise ConfigError("Unknown key.", key=f"{section}.{key}", line=line)
            kwargs[key] = _convert(raw, hints[key], f"{section}.{key}", line)
        values[section] = record(**kwargs)

    config = ScenarioConfig(**values)
    _validate(config, lines)
    return config


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _validate(config: ScenarioConfig, lines):
    def fail(section, key, message):
        raise ConfigError(message, key=f"{section}.{key}", line=lines.get((section, key)))

    for section in SECTIONS:
        record = getattr(config, section)
        for f in fields(record):
            value = getattr(record, f.name)
            if isinstance(value, float) and math.isnan(value):
                fail(section, f.name, "Value must not be NaN.")

    if config.scenario.pipeline not in PIPELINES:
        fail("scenario", "pipeline", f"Pipeline must be one of {PIPELINES}.")
    for key in ("k0", "L", "n0"):
        if not getattr(config.medium, key) > 0:
            fail("medium", key, "Value must be positive.")
    if not math.isfinite(config.medium.k0):
        fail("medium", "k0", "Value must be finite.")
    if config.launch.w0 < 0:
        fail("launch", "w0", "Value must be positive.")
    if config.launch.w0 == 0 and not (
        config.launch.L_over_zR > 0 and math.isfinite(config.medium.L)
    ):
        fail("launch", "L_over_zR", "Give a positive w0 or a positive L_over_zR.")
    if not config.launch.u0 > 0:
        fail("launch", "u0", "Value must be positive.")
    if config.launch.s0_profile not in ("flat", "tilted"):
        fail("launch", "s0_profile", "Profile must be 'flat' or 'tilted'.")
    if not math.isfinite(config.launch.theta0):
        fail("launch", "theta0", "Value must be finite.")
    if config.launch.s0_profile == "flat" and config.launch.theta0 != 0:
        fail("launch", "theta0", "A tilted launch needs s0_profile = tilted.")
    for key in ("n_x", "n_k"):
        if not _is_power_of_two(getattr(config.grid, key)):
            fail("grid", key, "Grid count must be a positive power of two.")
    if not config.grid.n_z > 0:
        fail("grid", "n_z", "Grid count must be positive.")
    for key in ("x_extent", "z_periods"):
        if not getattr(config.grid, key) > 0:
            fail("grid", key, "Extent must be positive.")
    for method in config.methods.methods:
        if method not in METHODS:
            fail("methods", "methods", f"Methods must be drawn from {METHODS}.")
    if config.methods.symbol not in BUILTIN_SYMBOLS:
        fail("methods", "symbol", f"Symbol must be one of {sorted(BUILTIN_SYMBOLS)}.")
    if config.methods.cgo_method not in ("abcd", "ode"):
        fail("methods", "cgo_method", "CGO method must be 'abcd' or 'ode'.")
    for branch in config.methods.branches:
        if branch not in BRANCHES:
            fail("methods", "branches", f"Branches must be drawn from {BRANCHES}.")
    if not 0 <= config.methods.branch_share <= 1:
        fail("methods", "branch_share", "Branch share must lie in [0, 1].")
    if config.methods.n_rays < 0:
        fail("methods", "n_rays", "Ray count must not be negative.")
    if not config.methods.split_step_per_length > 0:
        fail("methods", "split_step_per_length", "Step count must be positive.")
    for key in ("moment_order", "series_order"):
        if getattr(config.truncation, key) < 0:
            fail("truncation", key, "Order must not be negative.")
    for f in fields(config.tolerances):
        if not getattr(config.tolerances, f.name) > 0:
            fail("tolerances", f.name, "Tolerance must be positive.")
