import hashlib
import io
import json
import logging
import sys
from functools import wraps
from inspect import getcallargs
from textwrap import dedent, fill
from typing import IO, Callable, List, Optional, Sequence, Tuple, Union

import numba  # type: ignore
import numpy as np
import pandas as pd
import typeguard
from fsspec.core import url_to_fs  # type: ignore
from numpydoc_decorator.impl import humanize_type  # type: ignore
from typing_extensions import get_type_hints


class SemiclassicalError(Exception):
    """Base class for errors raised by this package."""


class SymbolEvaluationError(SemiclassicalError):
    def __init__(self, message, x=None, k=None):
        super().__init__(message)
        self.x = x
        self.k = k


class UnsupportedExtensionError(SemiclassicalError):
    pass


class AliasingError(SemiclassicalError):
    pass


class InputError(SemiclassicalError, ValueError):
    pass


class EvanescentBranchError(SemiclassicalError):
    pass


class CharacteristicSurfaceError(SemiclassicalError):
    pass


class IntegrationError(SemiclassicalError):
    def __init__(self, message, t=None, y=None):
        super().__init__(message)
        # Last good sample.
        self.t = t
        self.y = y


class ResolutionError(SemiclassicalError):
    pass


class DomainTooSmallError(SemiclassicalError):
    pass


class ConfigError(SemiclassicalError, ValueError):
    def __init__(self, message, key=None, line=None):
        if key is not None:
            where = f"key {key!r}"
            if line is not None:
                where += f" (line {line})"
            message = f"{where}: {message}"
        super().__init__(message)
        self.key = key
        self.line = line


class ParaxialValidityWarning(UserWarning):
    pass


class SeriesTruncationWarning(UserWarning):
    pass


class CoverageWarning(UserWarning):
    pass


def value_error(
    name,
    value,
    expectation,
):
    message = (
        f"Bad value for parameter {name}; expected {expectation}, " f"found {value!r}"
    )
    raise ValueError(message)


def hash_params(params):
    """Helper function to hash function parameters."""
    s = json.dumps(params, sort_keys=True, indent=4)
    h = hashlib.md5(s.encode()).hexdigest()
    return h, s


class CacheMiss(Exception):
    pass


class LoggingHelper:
    def __init__(
        self, *, name: str, out: Optional[Union[str, IO]], debug: bool = False
    ):
        # set up a logger
        logger = logging.getLogger(name)
        if debug:
            logger.setLevel(logging.DEBUG)
        else:
            logger.setLevel(logging.INFO)

        self._logger = logger

        # set up handler
        handler: Optional[logging.StreamHandler] = None
        if hasattr(out, "write"):
            handler = logging.StreamHandler(out)
        elif isinstance(out, str):
            handler = logging.FileHandler(out)
        self._handler = handler

        # configure handler
        if handler is not None:
            if debug:
                handler.setLevel(logging.DEBUG)
            else:
                handler.setLevel(logging.INFO)
            formatter = logging.Formatter(fmt="[%(levelname)s] %(message)s")
            handler.setFormatter(formatter)
            logger.addHandler(handler)

    def flush(self):
        if self._handler is not None:
            self._handler.flush()

    def debug(self, msg):
        # get the name of the calling function, helps with debugging
        caller_name = sys._getframe().f_back.f_code.co_name
        msg = f"{caller_name}: {msg}"
        self._logger.debug(msg)

        # flush messages immediately
        self.flush()

    def info(self, msg):
        self._logger.info(msg)
        self.flush()

    def warning(self, msg):
        self._logger.warning(msg)
        self.flush()

    def close(self):
        # Detach the handler so repeated resources don't duplicate output.
        if self._handler is not None:
            self._logger.removeHandler(self._handler)
            self._handler.close()
            self._handler = None


def check_types(f):
    """Simple decorator to provide runtime checking of parameter types.

    Only the arguments are checked, not the return value or any variables
    within the function, so users get an early and readable error when
    passing the wrong kind of input.

    """

    @wraps(f)
    def check_types_wrapper(*args, **kwargs):
        type_hints = get_type_hints(f)
        call_args = getcallargs(f, *args, **kwargs)
        for k, t in type_hints.items():
            if k in call_args:
                v = call_args[k]
                try:
                    typeguard.check_type(v, t)
                except typeguard.TypeCheckError as e:
                    expected_type = humanize_type(t)
                    actual_type = humanize_type(type(v))
                    message = fill(
                        dedent(
                            f"""
                        Parameter {k!r} with value {v!r} in call to function {f.__name__!r} has incorrect type:
                        found {actual_type}, expected {expected_type}. See below for further information.
                    """
                        )
                    )
                    message += f"\n\n{e}"
                    error = TypeError(message)
                    raise error from None
        return f(*args, **kwargs)

    return check_types_wrapper


def init_filesystem(url, **kwargs):
    """Initialise a fsspec filesystem from a given base URL and parameters."""

    fs, path = url_to_fs(url, **kwargs)

    # Path compatibility, fsspec behaviour varies between versions.
    while path.endswith("/") and len(path) > 1:
        path = path[:-1]

    return fs, path


def rk4_step(rhs: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """Take a single classical fourth-order Runge-Kutta step."""
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + (h / 2) * k1)
    k3 = rhs(t + h / 2, y + (h / 2) * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_integrate(
    rhs: Callable,
    y0: np.ndarray,
    t_span: Tuple[float, float],
    *,
    step: float,
    tolerance: Optional[float] = None,
    stations: Optional[Sequence[float]] = None,
    max_halvings: int = 30,
) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate dy/dt = rhs(t, y) with classical RK4.

    Parameters
    ----------
    rhs : callable
        Right-hand side, called as ``rhs(t, y)`` and returning an array
        shaped like `y`.
    y0 : ndarray
        Initial state, any shape, real or complex.
    t_span : tuple of float
        Start and stop of the evolution parameter; the stop may lie below
        the start for backward integration.
    step : float
        Default (and maximum) step magnitude.
    tolerance : float, optional
        If given, each step is checked against two half steps (Richardson
        estimate) and halved until the estimated relative local error is
        below `tolerance`.
    stations : sequence of float, optional
        Parameter values at which to record the state. If not given, the
        state is recorded after every accepted step.
    max_halvings : int
        Number of halvings below `step` tolerated before giving up.

    Returns
    -------
    t : ndarray
        Recorded parameter values, starting with ``t_span[0]``.
    y : ndarray
        Recorded states, stacked along a new leading axis.

    Raises
    ------
    IntegrationError
        If the step collapses or the state becomes non-finite.

    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    direction = 1.0 if t1 >= t0 else -1.0
    h_max = abs(step)
    h_min = h_max * 2.0**-max_halvings
    if h_max <= 0:
        value_error("step", step, "a positive number")

    if stations is None:
        targets = [t1]
        record_all = True
    else:
        targets = sorted(
            (float(s) for s in stations), key=lambda s: direction * (s - t0)
        )
        for s in targets:
            if direction * (s - t0) < 0 or direction * (s - t1) > 0:
                value_error("stations", s, f"values within {t_span}")
        record_all = False

    y = np.array(y0, copy=True)
    t = t0
    ts: List[float] = [t0]
    ys: List[np.ndarray] = [y.copy()]
    if not record_all and targets and targets[0] == t0:
        # Initial state already recorded.
        targets = targets[1:]
    h = h_max

    for target in targets:
        while direction * (target - t) > 0:
            h_try = min(h, abs(target - t))
            hit = h_try == abs(target - t)
            dt = direction * h_try
            y_full = rk4_step(rhs, t, y, dt)
            if tolerance is not None:
                y_mid = rk4_step(rhs, t, y, dt / 2)
                y_half = rk4_step(rhs, t + dt / 2, y_mid, dt / 2)
                scale = max(1.0, float(np.max(np.abs(y_half))))
                error = float(np.max(np.abs(y_half - y_full))) / 15 / scale
                if not np.isfinite(error) or error > tolerance:
                    h = h_try / 2
                    if h < h_min:
                        raise IntegrationError(
                            f"Step size collapsed below {h_min!r} at t={t!r}.",
                            t=t,
                            y=y,
                        )
                    continue
                y_new = y_half
            else:
                y_new = y_full
            if not np.all(np.isfinite(y_new)):
                raise IntegrationError(f"Non-finite state after t={t!r}.", t=t, y=y)
            t = target if hit else t + dt
            y = y_new
            if record_all:
                ts.append(t)
                ys.append(y.copy())
            # Recover the default step after a halving.
            h = min(2 * h_try, h_max) if tolerance is not None else h_max
        if not record_all:
            ts.append(t)
            ys.append(y.copy())

    return np.array(ts), np.stack(ys)


def format_grid_header(axes: Sequence[Tuple[str, float, float, int]]) -> str:
    lines = []
    for label, origin, spacing, count in axes:
        lines.append(f"# axis {label}: {origin!r},{spacing!r},{count}")
    return "\n".join(lines) + "\n"


def write_grid_csv(
    f: IO, values: np.ndarray, axes: Sequence[Tuple[str, float, float, int]]
):
    """Write a 2D grid as CSV with one ``# axis`` header line per axis,
    followed by the values in row-major order at 17 significant digits."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        value_error("values", values.shape, "a 2D array")
    f.write(format_grid_header(axes))
    buf = io.StringIO()
    pd.DataFrame(values).to_csv(buf, header=False, index=False, float_format="%.17g")
    f.write(buf.getvalue())


def read_grid_csv(
    f: IO,
) -> Tuple[np.ndarray, List[Tuple[str, float, float, int]]]:
    """Read a grid written by :func:`write_grid_csv`."""
    text = f.read()
    if isinstance(text, bytes):
        text = text.decode()
    axes = []
    body = []
    for line in text.splitlines():
        if line.startswith("# axis "):
            label, _, spec = line[len("# axis ") :].partition(":")
            origin, spacing, count = spec.strip().split(",")
            axes.append((label.strip(), float(origin), float(spacing), int(count)))
        elif line.strip():
            body.append(line)
    df = pd.read_csv(
        io.StringIO("\n".join(body)), header=None, float_precision="round_trip"
    )
    return df.to_numpy(dtype=float), axes


@numba.njit
def deposit_gaussian(origin, spacing, n, positions, charges, sigma):
    """Deposit point charges onto a uniform 1D grid with a normalised
    Gaussian kernel of standard deviation `sigma`."""
    out = np.zeros(n, dtype=np.float64)
    norm = 1.0 / (np.sqrt(2.0 * np.pi) * sigma)
    reach = int(np.ceil(5.0 * sigma / spacing))
    for i in range(positions.shape[0]):
        q = charges[i]
        if q == 0.0:
            continue
        centre = (positions[i] - origin) / spacing
        j0 = max(int(np.floor(centre)) - reach, 0)
        j1 = min(int(np.floor(centre)) + reach + 2, n)
        for j in range(j0, j1):
            d = origin + j * spacing - positions[i]
            out[j] += q * norm * np.exp(-0.5 * (d / sigma) ** 2)
    return out


@numba.njit(parallel=True)
def midpoint_double_sum(psi, table, phases):
    """Double-sum (midpoint rule) application of a tabulated symbol.

    `table` holds symbol values on the half-spaced position grid, so
    ``table[j + jj]`` is the symbol at the midpoint of nodes ``j`` and ``jj``;
    `phases[d + n - 1]` holds ``exp(i k (j - jj) dx)`` for ``d = j - jj``.
    The caller multiplies by ``dx dk / 2 pi``.
    """
    n = psi.shape[0]
    m = table.shape[1]
    out = np.zeros(n, dtype=np.complex128)
    for j in numba.prange(n):
        acc = 0.0 + 0.0j
        for jj in range(n):
            s = 0.0 + 0.0j
            row = table[j + jj]
            ph = phases[j - jj + n - 1]
            for q in range(m):
                s += row[q] * ph[q]
            acc += s * psi[jj]
        out[j] = acc
    return out
