"""Annealing envelopes A(s), B(s) with monotone interpolation.

Energies are ordinary frequencies in GHz (E/h).  Temperatures given in
kelvin convert via T[GHz] = (k_B/h) * T[K] with k_B/h = 20.8366 GHz/K.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

GHZ_PER_KELVIN = 20.836619123  # k_B / h

# Reference temperatures drawn on gap plots.
PROCESSOR_TEMP_GHZ = 0.44       # 21 mK dilution-refrigerator floor
SIMULATION_TEMP_GHZ = 0.015625  # 0.75 mK, = 1/(256 * 0.25 ns)


def kelvin_to_ghz(t_kelvin: float) -> float:
    return GHZ_PER_KELVIN * t_kelvin


def mk_to_ghz(t_millikelvin: float) -> float:
    return GHZ_PER_KELVIN * t_millikelvin * 1e-3


class ScheduleError(ValueError):
    """A schedule violates one of its structural invariants."""


@dataclass(frozen=True)
class Schedule:
    """Tabulated envelope pair with monotone piecewise-cubic evaluation.

    The driver weight A is non-increasing and the problem weight B is
    non-decreasing over [0, 1]; interpolation is shape-preserving (PCHIP),
    so evaluated values never overshoot the knots.  A 2-knot table is
    evaluated exactly linearly.
    """

    knots: np.ndarray
    a_vals: np.ndarray
    b_vals: np.ndarray
    name: str = "schedule"
    _a_interp: PchipInterpolator = field(init=False, repr=False, compare=False)
    _b_interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        a = np.asarray(self.a_vals, dtype=float)
        b = np.asarray(self.b_vals, dtype=float)
        if knots.ndim != 1 or len(knots) < 2:
            raise ScheduleError("need at least two knots")
        if len(a) != len(knots) or len(b) != len(knots):
            raise ScheduleError("a_vals/b_vals length must match knots")
        if np.any(np.diff(knots) <= 0):
            raise ScheduleError("knots not strictly increasing")
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise ScheduleError("knots must start at 0 and end at 1")
        if np.any(a < 0) or np.any(b < 0):
            raise ScheduleError("envelope energies must be >= 0")
        if np.any(np.diff(a) > 0):
            raise ScheduleError("A not non-increasing")
        if np.any(np.diff(b) < 0):
            raise ScheduleError("B not non-decreasing")
        if a[0] < 10.0 * b[0]:
            raise ScheduleError("A(0) must dominate B(0) (A(0) >= 10*B(0))")
        if b[-1] < 10.0 * a[-1]:
            raise ScheduleError("B(1) must dominate A(1) (B(1) >= 10*A(1))")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "a_vals", a)
        object.__setattr__(self, "b_vals", b)
        object.__setattr__(self, "_a_interp", PchipInterpolator(knots, a))
        object.__setattr__(self, "_b_interp", PchipInterpolator(knots, b))

    def _check_s(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0.0) or np.any(s > 1.0):
            raise ValueError("s must lie in [0, 1]")
        return s

    def values(self, s):
        """(A(s), B(s)) in GHz; scalar in, scalar out."""
        s = self._check_s(s)
        a = self._a_interp(s)
        b = self._b_interp(s)
        if s.ndim == 0:
            return float(a), float(b)
        return a, b

    def derivatives(self, s):
        """(A'(s), B'(s)): analytic derivative of the interpolant."""
        s = self._check_s(s)
        da = self._a_interp.derivative()(s)
        db = self._b_interp.derivative()(s)
        if s.ndim == 0:
            return float(da), float(db)
        return da, db

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return (
            np.array_equal(self.knots, other.knots)
            and np.array_equal(self.a_vals, other.a_vals)
            and np.array_equal(self.b_vals, other.b_vals)
            and self.name == other.name
        )


def linear_schedule(a0: float = 1.0, b1: float = 1.0) -> Schedule:
    """A(s) = a0*(1-s), B(s) = b1*s, represented exactly with two knots."""
    if a0 <= 0 or b1 <= 0:
        raise ScheduleError("linear schedule scales must be positive")
    return Schedule(
        knots=np.array([0.0, 1.0]),
        a_vals=np.array([a0, 0.0]),
        b_vals=np.array([0.0, b1]),
        name=f"linear({a0:g},{b1:g})",
    )


def load_schedule(path, name: str | None = None) -> Schedule:
    """Read a CSV table with header ``s,A_GHz,B_GHz``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["s", "A_GHz", "B_GHz"]:
            raise ScheduleError(f"{path}: expected header 's,A_GHz,B_GHz'")
        rows = [row for row in reader if row]
    try:
        data = np.array([[float(x) for x in row] for row in rows])
    except ValueError as exc:
        raise ScheduleError(f"{path}: non-numeric entry ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != 3:
        raise ScheduleError(f"{path}: each row needs 3 columns")
    return Schedule(
        knots=data[:, 0],
        a_vals=data[:, 1],
        b_vals=data[:, 2],
        name=name or str(path),
    )


def save_schedule(schedule: Schedule, path) -> None:
    """Write the knot table; formatting is canonical so saves are byte-stable."""
    lines = ["s,A_GHz,B_GHz"]
    for s, a, b in zip(schedule.knots, schedule.a_vals, schedule.b_vals):
        lines.append(f"{s!r},{a!r},{b!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
