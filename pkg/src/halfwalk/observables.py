"""Position-space observables, spreading power laws and half-line asymmetry."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import CoinBlockMatrix
from .errors import InvalidArgument
from .lattice import SpinorField
from .trajectories import EnsembleAccumulator

#: Fits never use t below this; the first steps are a log-log transient.
FIT_MIN_T = 8


@dataclass(frozen=True, eq=False)
class PositionDistribution:
    t: int
    sites: np.ndarray
    probabilities: np.ndarray

    def total(self) -> float:
        return float(self.probabilities.sum())

    def as_dict(self, threshold: float = 0.0) -> dict[int, float]:
        keep = self.probabilities >= threshold
        return dict(zip(self.sites[keep].tolist(), self.probabilities[keep].tolist()))


def position_distribution(source, t: int) -> PositionDistribution:
    """P_k(t) from a pure state, a block density matrix, or an ensemble accumulator."""
    if isinstance(source, SpinorField):
        return PositionDistribution(t, source.sites, source.probabilities())
    if isinstance(source, CoinBlockMatrix):
        return PositionDistribution(t, source.sites, source.position_probabilities())
    if isinstance(source, EnsembleAccumulator):
        return PositionDistribution(t, source.sites, source.mean_positions(t))
    raise TypeError(f"cannot read a position distribution from {type(source).__name__}")


def distribution_from_mapping(t: int, probs: dict[int, float]) -> PositionDistribution:
    sites = np.array(sorted(probs))
    return PositionDistribution(t, sites, np.array([probs[x] for x in sites], dtype=float))


@dataclass(frozen=True, eq=False)
class SpreadSeries:
    t: np.ndarray
    mean: np.ndarray
    sigma: np.ndarray

    def __len__(self):
        return len(self.t)


def spread_from_moments(t, first, second) -> SpreadSeries:
    """Population spread from per-step <x> and <x^2>; tiny negative variances clip to 0."""
    t = np.asarray(t)
    first = np.asarray(first, dtype=float)
    var = np.asarray(second, dtype=float) - first**2
    return SpreadSeries(t, first, np.sqrt(np.clip(var, 0.0, None)))


def spread_series(distributions) -> SpreadSeries:
    distributions = list(distributions)
    if not distributions:
        raise InvalidArgument("spread series needs at least one distribution")
    ts, firsts, seconds = [], [], []
    for d in distributions:
        x = d.sites.astype(float)
        ts.append(d.t)
        firsts.append(float(d.probabilities @ x))
        seconds.append(float(d.probabilities @ (x * x)))
    return spread_from_moments(ts, firsts, seconds)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    fit_window: tuple[int, int]
    rms_residual: float

    def as_dict(self) -> dict:
        return {"exponent": self.exponent, "prefactor": self.prefactor,
                "fit_window": list(self.fit_window), "rms_residual": self.rms_residual}


def fit_power_law(series: SpreadSeries, window_fraction: float = 0.5) -> PowerLawFit:
    """Least squares of log sigma on log t over the last ``window_fraction`` of the series.

    Points with t < FIT_MIN_T are always excluded.
    """
    if len(series) < 16:
        raise InvalidArgument("power-law fit needs at least 16 points")
    if not (0 < window_fraction <= 1):
        raise InvalidArgument("window_fraction must lie in (0, 1]")
    t = np.asarray(series.t, dtype=float)
    start = len(t) - max(2, int(round(window_fraction * len(t))))
    mask = np.zeros(len(t), dtype=bool)
    mask[start:] = True
    mask &= t >= FIT_MIN_T
    if mask.sum() < 2:
        raise InvalidArgument("fit window holds fewer than two points with t >= 8")
    sigma = np.asarray(series.sigma, dtype=float)[mask]
    if np.any(sigma <= 0):
        raise InvalidArgument("sigma must be positive inside the fit window")
    log_t = np.log(t[mask])
    log_s = np.log(sigma)
    design = np.column_stack([log_t, np.ones_like(log_t)])
    (slope, intercept), *_ = np.linalg.lstsq(design, log_s, rcond=None)
    resid = log_s - design @ np.array([slope, intercept])
    tw = t[mask]
    return PowerLawFit(float(slope), float(math.exp(intercept)), (int(tw[0]), int(tw[-1])),
                       float(np.sqrt(np.mean(resid**2))))


def half_line_masses(dist: PositionDistribution) -> tuple[float, float]:
    """Mass on x < 0 and on x >= 0 (site 0 sits in the dephasing half)."""
    left = dist.sites < 0
    return float(dist.probabilities[left].sum()), float(dist.probabilities[~left].sum())


def excess_kurtosis(sites, probabilities) -> float:
    """Excess kurtosis of a (renormalized) distribution over sites."""
    w = np.asarray(probabilities, dtype=float)
    x = np.asarray(sites, dtype=float)
    w = w / w.sum()
    mu = w @ x
    d = x - mu
    var = w @ d**2
    return float((w @ d**4) / var**2 - 3.0)


def half_line_shape(dist: PositionDistribution) -> dict:
    """Peak location and excess kurtosis of each half-line, each renormalized to unit mass."""
    left = dist.sites < 0
    out = {}
    for name, mask in (("left", left), ("right", ~left)):
        x, w = dist.sites[mask], dist.probabilities[mask]
        out[name] = {"mass": float(w.sum()), "peak_site": int(x[np.argmax(w)]),
                     "excess_kurtosis": excess_kurtosis(x, w)}
    return out


def bootstrap_sigma(moments: tuple[np.ndarray, np.ndarray], resamples: int = 200, seed: int = 0) -> np.ndarray:
    """Standard error of sigma(t) by resampling whole trajectories; shape (steps + 1,)."""
    first, second = moments
    n = first.shape[0]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    draws = np.empty((resamples, first.shape[1]))
    for i in range(resamples):
        pick = rng.integers(0, n, n)
        m1 = first[pick].mean(axis=0)
        m2 = second[pick].mean(axis=0)
        draws[i] = np.sqrt(np.clip(m2 - m1**2, 0.0, None))
    return draws.std(axis=0, ddof=1)
