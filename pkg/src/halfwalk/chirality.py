"""Global chirality distribution (GCD): coin marginals Pi_L, Pi_R and interference Q."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import CoinBlockMatrix
from .errors import InvalidArgument


@dataclass(frozen=True)
class GcdPoint:
    t: int
    pi_l: float
    pi_r: float
    q: float

    def __post_init__(self):
        if abs(self.pi_l + self.pi_r - 1.0) > 1e-10:
            raise InvalidArgument(f"Pi_L + Pi_R = {self.pi_l + self.pi_r!r} at t={self.t}")
        if not (-1e-12 <= self.pi_l <= 1 + 1e-12 and -1e-12 <= self.pi_r <= 1 + 1e-12):
            raise InvalidArgument(f"chirality probabilities out of [0, 1] at t={self.t}")
        if abs(self.q) > 0.5 + 1e-12:
            raise InvalidArgument(f"|Q| = {abs(self.q)!r} exceeds 1/2 at t={self.t}")


@dataclass(frozen=True)
class GcdSeries:
    points: tuple[GcdPoint, ...]
    provenance: str = "exact-channel"

    def __post_init__(self):
        for i, pt in enumerate(self.points):
            if pt.t != i:
                raise InvalidArgument(f"GCD series must run over t = 0, 1, ...; got t={pt.t} at index {i}")

    @classmethod
    def from_arrays(cls, pi_l, pi_r, q, provenance: str = "exact-channel") -> "GcdSeries":
        return cls(tuple(GcdPoint(t, float(l), float(r), float(qq))
                         for t, (l, r, qq) in enumerate(zip(pi_l, pi_r, q))), provenance)

    def __len__(self):
        return len(self.points)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pts = self.points
        return (np.array([p.pi_l for p in pts]), np.array([p.pi_r for p in pts]),
                np.array([p.q for p in pts]))


@dataclass(frozen=True)
class StationaryEstimate:
    pi_l_inf: float
    pi_r_inf: float
    q_inf: float
    window: tuple[int, int]
    residual: float  # |sin^2 g (Pi_L - Pi_R) - sin 2g Q|, defined for every gamma
    residual_tan_form: float | None  # |(Pi_L - Pi_R) - 2 Q / tan g|, None if tan g is 0 or infinite

    def predicted_pi_l(self, gamma: float) -> float | None:
        """Pi_L(inf) implied by the fixed point, ``(1 + 2 Q / tan g) / 2``."""
        t = math.tan(gamma)
        if t == 0 or not math.isfinite(t):
            return None
        return 0.5 * (1 + 2 * self.q_inf / t)


def reduce_to_coin(rho: CoinBlockMatrix) -> np.ndarray:
    """Partial trace over position, sum_x R_{x,x}."""
    return rho.coin_reduced()


def gcd_from_coin(coin_rho: np.ndarray, t: int = 0) -> GcdPoint:
    coin_rho = np.asarray(coin_rho)
    trace = coin_rho[0, 0].real + coin_rho[1, 1].real
    if abs(trace - 1.0) > 1e-8:
        raise InvalidArgument(f"coin density matrix has trace {trace!r}")
    q = 0.5 * (coin_rho[0, 1] + coin_rho[1, 0]).real
    return GcdPoint(t, float(coin_rho[0, 0].real), float(coin_rho[1, 1].real), float(q))


def gcd_recursion_step(point: GcdPoint, gamma: float) -> tuple[float, float]:
    c2 = math.cos(gamma) ** 2
    s2 = math.sin(gamma) ** 2
    s2g = math.sin(2 * gamma)
    return (c2 * point.pi_l + s2 * point.pi_r + s2g * point.q,
            s2 * point.pi_l + c2 * point.pi_r - s2g * point.q)


def recursion_residuals(series: GcdSeries, gamma: float) -> np.ndarray:
    """``max(|dPi_L|, |dPi_R|)`` between each step and its prediction, length ``len(series) - 1``."""
    if len(series) < 2:
        raise InvalidArgument("recursion check needs at least two points")
    pts = series.points
    out = np.empty(len(pts) - 1)
    for i in range(len(pts) - 1):
        l, r = gcd_recursion_step(pts[i], gamma)
        out[i] = max(abs(pts[i + 1].pi_l - l), abs(pts[i + 1].pi_r - r))
    return out


def verify_recursion(series: GcdSeries, gamma: float, tolerance: float) -> tuple[float, bool]:
    worst = float(recursion_residuals(series, gamma).max())
    return worst, worst < tolerance


def stationary_estimate(series: GcdSeries, gamma: float, tail_fraction: float = 0.5) -> StationaryEstimate:
    """Tail averages of the GCD and their distance from the fixed-point relation."""
    if len(series) < 20:
        raise InvalidArgument("stationary estimate needs at least 20 points")
    if not (0 < tail_fraction <= 1):
        raise InvalidArgument("tail_fraction must lie in (0, 1]")
    pi_l, pi_r, q = series.arrays()
    start = len(series) - max(1, int(round(tail_fraction * len(series))))
    l, r, qq = (float(v[start:].mean()) for v in (pi_l, pi_r, q))
    s, c = math.sin(gamma), math.cos(gamma)
    residual = abs(s * s * (l - r) - 2 * s * c * qq)
    tan_form = None
    if abs(s) > 1e-12 and abs(c) > 1e-12:
        tan_form = abs((l - r) - 2 * qq * c / s)
    return StationaryEstimate(l, r, qq, (series.points[start].t, series.points[-1].t), residual, tan_form)
