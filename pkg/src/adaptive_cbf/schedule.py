"""C1 inter-sample interpolation of the estimate and the error bound.

Between estimator updates the controller needs a continuously differentiable
parameter estimate theta(t) and bound nu(t).  Both are built from the sample
sequences by blending consecutive values with a ramp

    xi(s) = 0                           for s <= 0
          = eta*s - sin(2*pi*eta*s)/(2*pi)  for 0 <= s <= 1/eta
          = 1                           for s >= 1/eta

whose derivative eta*(1 - cos(2*pi*eta*s)) vanishes at both ends of the ramp.
On the interval [t_k, t_{k+1}) the blend runs from the previous pair
(theta_{k-1}, nu_{k-1}) to the current pair (theta_k, nu_k), with the
convention that the pair before time zero equals the initial pair.  Evaluation
therefore only ever reads values that were available at time t.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

_TWO_PI = 2.0 * math.pi


def xi(t: float, eta: float) -> float:
    """Smooth 0-to-1 ramp completing at t = 1/eta."""
    if eta < 1.0:
        raise ValueError(f"eta must be >= 1, got {eta}")
    if t <= 0.0:
        return 0.0
    if t >= 1.0 / eta:
        return 1.0
    return eta * t - math.sin(_TWO_PI * eta * t) / _TWO_PI


def xi_derivative(t: float, eta: float) -> float:
    if eta < 1.0:
        raise ValueError(f"eta must be >= 1, got {eta}")
    if t <= 0.0 or t >= 1.0 / eta:
        return 0.0
    return eta * (1.0 - math.cos(_TWO_PI * eta * t))


@dataclass(frozen=True)
class BlendFunction:
    """Callable wrapper around the ramp, parameterized by eta >= 1."""

    eta: float = 2.0

    def __post_init__(self):
        if self.eta < 1.0:
            raise ValueError(f"eta must be >= 1, got {self.eta}")

    def __call__(self, t: float) -> float:
        return xi(t, self.eta)

    def derivative(self, t: float) -> float:
        return xi_derivative(t, self.eta)


class Schedule:
    """Append-only sample grid with causal blended evaluation.

    ``next_dt`` is the expected length of the still-open interval after the
    last appended sample; for a uniform sampling grid it is the sample period.
    Once the blend argument saturates, evaluation past the last grid point
    holds the final pair constant.  If ``next_dt`` is None the last recorded
    spacing is reused (a single-point schedule then holds its pair constant).
    """

    def __init__(self, t0: float, theta0, nu0: float,
                 blend: BlendFunction | None = None,
                 next_dt: float | None = None):
        if nu0 < 0.0:
            raise ValueError("nu0 must be nonnegative")
        self.blend = blend if blend is not None else BlendFunction()
        self.next_dt = next_dt
        self._grid = [float(t0)]
        self._thetas = [np.asarray(theta0, dtype=float).copy()]
        self._nus = [float(nu0)]

    def __len__(self) -> int:
        return len(self._grid)

    @property
    def grid(self):
        return tuple(self._grid)

    @property
    def thetas(self):
        return tuple(self._thetas)

    @property
    def nus(self):
        return tuple(self._nus)

    def append(self, t: float, theta, nu: float) -> None:
        if t <= self._grid[-1]:
            raise ValueError(f"sample time {t} not after grid end {self._grid[-1]}")
        if nu < 0.0:
            raise ValueError("nu must be nonnegative")
        self._grid.append(float(t))
        self._thetas.append(np.asarray(theta, dtype=float).copy())
        self._nus.append(float(nu))

    def _interval_end(self, j: int) -> float:
        if j + 1 < len(self._grid):
            return self._grid[j + 1]
        if self.next_dt is not None:
            return self._grid[j] + self.next_dt
        if j > 0:
            return self._grid[j] + (self._grid[j] - self._grid[j - 1])
        return self._grid[j]  # no spacing known: degenerate, hold constant

    def eval(self, t: float):
        """Blended (theta(t), nu(t)); only samples with t_j <= t are read."""
        grid = self._grid
        if t < grid[0]:
            raise ValueError(f"t={t} precedes schedule start {grid[0]}")
        j = bisect_right(grid, t) - 1
        t_j = grid[j]
        end = self._interval_end(j)
        if j == 0 or end <= t_j:
            return self._thetas[j], self._nus[j]
        s = self.blend((t - t_j) / (end - t_j))
        if s >= 1.0:
            return self._thetas[j], self._nus[j]
        if s <= 0.0:
            return self._thetas[j - 1], self._nus[j - 1]
        th = s * self._thetas[j] + (1.0 - s) * self._thetas[j - 1]
        nu = s * self._nus[j] + (1.0 - s) * self._nus[j - 1]
        return th, nu
