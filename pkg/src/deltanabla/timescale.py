"""Exact calculus on finite time scales.

A time scale here is a finite, strictly increasing set of real points.
This module provides the jump operators (sigma, rho), the graininess
functions (mu, nu), forward/backward difference quotients (delta and
nabla derivatives), the corresponding sums (delta and nabla integrals),
composition with the jump operators (shift), and the norm used to state
local optimality.  Everything is a finite sum or quotient: there is no
floating-point approximation beyond ordinary rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np


class DomainError(ValueError):
    """Raised when a point is not a member of the time scale."""


class GridShapeError(ValueError):
    """Raised when a grid function and time scale disagree in length."""


@dataclass(frozen=True)
class TimeScale:
    """Finite set of real points, kept sorted and strictly increasing.

    Two points are the minimum useful size: a single forward (or
    backward) difference is then defined.  Operations that need an
    interior point (norms, stationarity residuals) check for three or
    more points themselves.
    """

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1:
            raise ValueError("time scale points must form a 1-d sequence")
        if pts.size < 2:
            raise ValueError("time scale needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("time scale points must be finite")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("time scale points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def a(self) -> float:
        """Smallest point."""
        return float(self.points[0])

    @property
    def b(self) -> float:
        """Largest point."""
        return float(self.points[-1])

    def __len__(self) -> int:
        return int(self.points.size)

    def index(self, t: float) -> int:
        """Position of ``t`` in the scale; DomainError if absent."""
        i = int(np.searchsorted(self.points, t))
        if i == len(self.points) or self.points[i] != t:
            raise DomainError(f"point {t!r} is not in the time scale")
        return i

    def __contains__(self, t: float) -> bool:
        i = int(np.searchsorted(self.points, t))
        return i < len(self.points) and self.points[i] == t

    def sigma(self, t: float) -> float:
        """Forward jump: next point after ``t``, with sigma(max) = max."""
        i = self.index(t)
        return float(self.points[min(i + 1, len(self.points) - 1)])

    def rho(self, t: float) -> float:
        """Backward jump: previous point, with rho(min) = min."""
        i = self.index(t)
        return float(self.points[max(i - 1, 0)])

    def mu(self, t: float) -> float:
        """Forward graininess sigma(t) - t (zero at the maximum)."""
        return self.sigma(t) - t

    def nu(self, t: float) -> float:
        """Backward graininess t - rho(t) (zero at the minimum)."""
        return t - self.rho(t)

    def mu_values(self) -> np.ndarray:
        """Forward graininess at every point; last entry is 0."""
        return np.append(np.diff(self.points), 0.0)

    def nu_values(self) -> np.ndarray:
        """Backward graininess at every point; first entry is 0."""
        return np.insert(np.diff(self.points), 0, 0.0)


def grain(scale: TimeScale, t: float) -> tuple[float, float]:
    """Pair (mu, nu) of graininess values at ``t``."""
    return scale.mu(t), scale.nu(t)


@dataclass(frozen=True)
class GridFunction:
    """Real values attached pointwise to a time scale."""

    scale: TimeScale
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.scale.points.shape:
            raise GridShapeError(
                f"expected {len(self.scale)} values, got {vals.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def sample(cls, scale: TimeScale, fn: Callable[[float], float]) -> "GridFunction":
        """Evaluate a scalar function at every point of the scale."""
        return cls(scale, np.array([fn(t) for t in scale.points]))

    def __call__(self, t: float) -> float:
        return float(self.values[self.scale.index(t)])

    def __len__(self) -> int:
        return len(self.scale)


def delta_derivative(y: GridFunction) -> GridFunction:
    """Forward difference quotient (y(sigma(t)) - y(t)) / mu(t).

    The quotient is defined at every point except the maximum, where
    mu vanishes.  The returned grid function lives on the full scale;
    the final entry extends the definition by the backward quotient at
    the maximum, so the pair of derivative conversions (compose with
    rho, compose with sigma) are exact inverses on whole grids.  Sums
    over the proper window never touch the extension because mu(max)=0.
    """
    t = y.scale.points
    dq = np.diff(y.values) / np.diff(t)
    return GridFunction(y.scale, np.append(dq, dq[-1]))


def nabla_derivative(y: GridFunction) -> GridFunction:
    """Backward difference quotient (y(t) - y(rho(t))) / nu(t).

    Defined at every point except the minimum, where nu vanishes; the
    first entry of the result extends the definition by the forward
    quotient there, mirroring delta_derivative.
    """
    t = y.scale.points
    dq = np.diff(y.values) / np.diff(t)
    return GridFunction(y.scale, np.insert(dq, 0, dq[0]))


def _window(scale: TimeScale, a: float, b: float) -> tuple[int, int]:
    ia, ib = scale.index(a), scale.index(b)
    if ia >= ib:
        raise ValueError(f"integration bounds out of order: {a!r} >= {b!r}")
    return ia, ib


def delta_integral(f: GridFunction, a: float, b: float) -> float:
    """Sum of f(t) * mu(t) over points of [a, b) in the scale.

    The value at b itself never enters the sum.
    """
    ia, ib = _window(f.scale, a, b)
    t = f.scale.points
    return float(np.dot(f.values[ia:ib], np.diff(t[ia : ib + 1])))


def nabla_integral(f: GridFunction, a: float, b: float) -> float:
    """Sum of f(t) * nu(t) over points of (a, b] in the scale."""
    ia, ib = _window(f.scale, a, b)
    t = f.scale.points
    return float(np.dot(f.values[ia + 1 : ib + 1], np.diff(t[ia : ib + 1])))


def shift(y: GridFunction, direction: Literal["forward", "backward"]) -> GridFunction:
    """Compose with a jump operator: forward is y(sigma(t)), backward y(rho(t)).

    The endpoints stay put because sigma(max) = max and rho(min) = min.
    """
    v = y.values
    if direction == "forward":
        out = np.append(v[1:], v[-1])
    elif direction == "backward":
        out = np.insert(v[:-1], 0, v[0])
    else:
        raise ValueError(f"unknown shift direction {direction!r}")
    return GridFunction(y.scale, out)


def diamond_norm(y: GridFunction) -> float:
    """Norm combining shifted values and both difference quotients.

    sup|y(sigma(t))| + sup|y(rho(t))| + sup|delta y| + sup|nabla y|,
    each supremum taken over the interior points of the scale (needs
    at least one, so three points or more).
    """
    if len(y) < 3:
        raise ValueError("diamond norm needs at least one interior point")
    inner = slice(1, -1)
    ysig = shift(y, "forward").values[inner]
    yrho = shift(y, "backward").values[inner]
    yd = delta_derivative(y).values[inner]
    yn = nabla_derivative(y).values[inner]
    return float(
        np.max(np.abs(ysig))
        + np.max(np.abs(yrho))
        + np.max(np.abs(yd))
        + np.max(np.abs(yn))
    )
