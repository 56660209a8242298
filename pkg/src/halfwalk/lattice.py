"""Pure-state walker on the integer line: coin family, spinor fields, one-step unitary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidArgument

#: Default walker chirality, (1, i)/sqrt(2).
SYMMETRIC_CHIRALITY = (1 / math.sqrt(2), 1j / math.sqrt(2))


@dataclass(frozen=True)
class LatticeWindow:
    """Closed range of site indices ``[min_x, max_x]`` that always contains the origin."""

    min_x: int
    max_x: int

    def __post_init__(self):
        if not (self.min_x <= 0 <= self.max_x):
            raise InvalidArgument(f"window [{self.min_x}, {self.max_x}] must contain site 0")

    @classmethod
    def around(cls, position: int, steps: int) -> "LatticeWindow":
        """Smallest window holding everything reachable from ``position`` in ``steps`` steps."""
        return cls(min(position - steps, 0), max(position + steps, 0))

    @property
    def size(self) -> int:
        return self.max_x - self.min_x + 1

    def sites(self) -> np.ndarray:
        return np.arange(self.min_x, self.max_x + 1)

    def __contains__(self, x) -> bool:
        return self.min_x <= x <= self.max_x


@dataclass(frozen=True)
class CoinOperator:
    """K(gamma) = sigma_z cos(gamma) + sigma_x sin(gamma)."""

    gamma: float

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise InvalidArgument(f"gamma must be finite, got {self.gamma!r}")

    @cached_property
    def cos(self) -> float:
        return math.cos(self.gamma)

    @cached_property
    def sin(self) -> float:
        return math.sin(self.gamma)

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.array([[self.cos, self.sin], [self.sin, -self.cos]], dtype=complex)
        m.setflags(write=False)
        return m


def coin_matrix(gamma: float) -> np.ndarray:
    """Return the 2x2 coin ``[[cos g, sin g], [sin g, -cos g]]`` as a fresh complex array."""
    return CoinOperator(float(gamma)).matrix.copy()


@dataclass(frozen=True)
class InitialState:
    position: int = 0
    chirality: tuple[complex, complex] = SYMMETRIC_CHIRALITY

    def __post_init__(self):
        left, right = self.chirality
        norm = abs(left) ** 2 + abs(right) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgument(f"chirality must have unit norm, got |.|^2 = {norm!r}")

    @property
    def spinor(self) -> np.ndarray:
        return np.array(self.chirality, dtype=complex)


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Per-site amplitudes ``(a_x, b_x)``; column 0 is left chirality, column 1 right.

    ``amplitudes[i]`` belongs to site ``window.min_x + i``.
    """

    window: LatticeWindow
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.window.size, 2):
            raise InvalidArgument(
                f"amplitudes shape {amps.shape} does not match window of {self.window.size} sites"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def localized(cls, initial: InitialState, window: LatticeWindow | None = None) -> "SpinorField":
        if window is None:
            window = LatticeWindow(min(initial.position, 0), max(initial.position, 0))
        if initial.position not in window:
            raise InvalidArgument(f"initial position {initial.position} outside {window}")
        amps = np.zeros((window.size, 2), dtype=complex)
        amps[initial.position - window.min_x] = initial.spinor
        return cls(window, amps)

    @property
    def sites(self) -> np.ndarray:
        return self.window.sites()

    @property
    def left(self) -> np.ndarray:
        return self.amplitudes[:, 0]

    @property
    def right(self) -> np.ndarray:
        return self.amplitudes[:, 1]

    def at(self, x: int) -> np.ndarray:
        if x not in self.window:
            return np.zeros(2, dtype=complex)
        return self.amplitudes[x - self.window.min_x]

    def probabilities(self) -> np.ndarray:
        return (np.abs(self.amplitudes) ** 2).sum(axis=1)

    def norm_squared(self) -> float:
        return float(self.probabilities().sum())

    def embedded(self, window: LatticeWindow) -> "SpinorField":
        """Same state on a larger window; refuses to drop nonzero amplitude."""
        lo = self.window.min_x - window.min_x
        hi = lo + self.window.size
        if lo < 0 or hi > window.size:
            raise InvalidArgument(f"{window} does not cover {self.window}")
        amps = np.zeros((window.size, 2), dtype=complex)
        amps[lo:hi] = self.amplitudes
        return SpinorField(window, amps)


def _grown_window(state: SpinorField) -> LatticeWindow:
    amps = state.amplitudes
    grow_left = bool(np.any(amps[0] != 0))
    grow_right = bool(np.any(amps[-1] != 0))
    return LatticeWindow(state.window.min_x - grow_left, state.window.max_x + grow_right)


def unitary_step(state: SpinorField, coin: CoinOperator) -> SpinorField:
    """One step of U = T_- (x) |L><L| K + T_+ (x) |R><R| K.

    ``a_x <- cos*a_{x+1} + sin*b_{x+1}`` and ``b_x <- sin*a_{x-1} - cos*b_{x-1}``.
    The window grows by one site on any side whose edge site is occupied.
    """
    c, s = coin.cos, coin.sin
    window = _grown_window(state)
    src = state.embedded(window).amplitudes
    a, b = src[:, 0], src[:, 1]
    out = np.zeros_like(src)
    out[:-1, 0] = c * a[1:] + s * b[1:]
    out[1:, 1] = s * a[:-1] - c * b[:-1]
    return SpinorField(window, out)


def adjoint_step(state: SpinorField, coin: CoinOperator) -> SpinorField:
    """Inverse of :func:`unitary_step` (K is real symmetric and squares to one)."""
    c, s = coin.cos, coin.sin
    window = _grown_window(state)
    src = state.embedded(window).amplitudes
    # Pre-coin spinor at y is (a'_{y-1}, b'_{y+1}); undo the coin with K itself.
    left = np.zeros(window.size, dtype=complex)
    right = np.zeros(window.size, dtype=complex)
    left[1:] = src[:-1, 0]
    right[:-1] = src[1:, 1]
    out = np.empty_like(src)
    out[:, 0] = c * left + s * right
    out[:, 1] = s * left - c * right
    return SpinorField(window, out)


def evolve_pure(initial: InitialState, coin: CoinOperator, steps: int) -> list[SpinorField]:
    """States at t = 0..steps, preallocated on the full reachable window."""
    window = LatticeWindow.around(initial.position, steps)
    state = SpinorField.localized(initial, window)
    states = [state]
    for _ in range(steps):
        state = unitary_step(state, coin)
        states.append(state)
    return states
