"""Monotone piecewise-linear functions on [0, 1].

These carry the moduli of uniform continuity of signature symbols and the
unary witness functions (alpha, beta, gamma) that turn an implication
"phi = 0 implies psi = 0" into a single sentence ``sup(psi -. alpha(phi))``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

TOL = 1e-9


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class PLFunc:
    """Piecewise-linear function given by breakpoints ``((x0, y0), ...)``.

    ``x0`` must be 0 and the last x must be 1.  ``increasing`` and
    ``zero_at_zero`` are declared properties and are checked on construction.
    """

    points: tuple[tuple[float, float], ...]
    increasing: bool = True
    zero_at_zero: bool = False

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        problems = self.problems()
        if problems:
            raise DomainError("; ".join(problems))

    def problems(self) -> list[str]:
        pts = self.points
        out = []
        if len(pts) < 2:
            return ["need at least two breakpoints"]
        if pts[0][0] != 0.0 or pts[-1][0] != 1.0:
            out.append("breakpoints must span x=0 to x=1")
        for x, y in pts:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                out.append(f"breakpoint ({x}, {y}) outside [0,1]^2")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if not x1 > x0:
                out.append(f"x not strictly increasing at {x1}")
            if self.increasing and y1 < y0:
                out.append(f"declared increasing but drops at x={x1}")
        if self.zero_at_zero and pts[0][1] != 0.0:
            out.append(f"zero-at-zero violated: f(0) = {pts[0][1]}")
        return out

    @classmethod
    def identity(cls) -> "PLFunc":
        return cls(((0, 0), (1, 1)), zero_at_zero=True)

    @classmethod
    def linear(cls, slope: float) -> "PLFunc":
        """``t -> min(slope * t, 1)``."""
        if slope <= 1:
            return cls(((0, 0), (1, slope)), zero_at_zero=True)
        return cls(((0, 0), (1 / slope, 1), (1, 1)), zero_at_zero=True)

    @classmethod
    def from_json(cls, data, **flags) -> "PLFunc":
        return cls(tuple((x, y) for x, y in data), **flags)

    def to_json(self):
        return [[x, y] for x, y in self.points]

    @property
    def xs(self):
        return [p[0] for p in self.points]

    def __call__(self, x: float) -> float:
        return pl_eval(self, x)

    def lipschitz(self) -> float:
        return max(abs(y1 - y0) / (x1 - x0)
                   for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]))


def _segment(f: PLFunc, x: float) -> int:
    # index i with x in [x_i, x_{i+1}]
    i = bisect.bisect_right(f.xs, x) - 1
    return min(max(i, 0), len(f.points) - 2)


def _interp(x0, y0, x1, y1, x):
    # Shared by the scalar and vectorized paths so both round identically.
    return y0 + (x - x0) * (y1 - y0) / (x1 - x0)


def pl_eval(f: PLFunc, x: float) -> float:
    if not (-TOL <= x <= 1 + TOL):
        raise DomainError(f"{x} outside [0,1]")
    x = min(max(float(x), 0.0), 1.0)
    i = _segment(f, x)
    (x0, y0), (x1, y1) = f.points[i], f.points[i + 1]
    if x == x0:
        return y0
    if x == x1:
        return y1
    return _interp(x0, y0, x1, y1, x)


def pl_eval_array(f: PLFunc, x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`pl_eval`; bit-identical to the scalar version."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    xs = np.array(f.xs)
    ys = np.array([p[1] for p in f.points])
    i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
    x0, x1, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
    out = _interp(x0, y0, x1, y1, x)
    out = np.where(x == x0, y0, out)
    return np.where(x == x1, y1, out)


def modulus_threshold(delta: PLFunc, d: float) -> float:
    """Tightest output-distance bound a modulus allows at input distance ``d``.

    Returns ``inf {eps : delta(eps) > d}``, or 1 when no such eps exists.
    """
    if not (-TOL <= d <= 1 + TOL):
        raise DomainError(f"{d} outside [0,1]")
    pts = delta.points
    if pts[-1][1] <= d:
        return 1.0
    if pts[0][1] > d:
        return 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if y1 > d:
            # y0 <= d < y1 on this segment
            return min(x0 + (d - y0) * (x1 - x0) / (y1 - y0), 1.0)
    return 1.0
