"""Stochastic pure-state unravelings of the half-line dephasing channel.

Random streams: trajectory ``i`` of a run with master seed ``s`` draws from
``numpy.random.Generator(Philox(SeedSequence(s, spawn_key=(i,))))``.  Philox is
counter based, so the stream depends only on ``(s, i)``.  Flip-global and
kraus-sample consume one double per step; flip-per-site consumes one double per
occupied site ``x >= 0`` (nonzero amplitude after the shift), in increasing ``x``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import DecoherenceModel, evolve_channel, DEFAULT_MEMORY_BUDGET
from .errors import InvalidArgument, InvariantViolation, NotRecorded
from .lattice import CoinOperator, InitialState, LatticeWindow, SpinorField, unitary_step

#: Trajectories per work unit.  Fixed so results never depend on worker count.
BATCH_SIZE = 64
_NORM_TOLERANCE = 1e-10


class UnravelingMode(str, enum.Enum):
    KRAUS_SAMPLE = "kraus-sample"
    FLIP_GLOBAL = "flip-global"
    FLIP_PER_SITE = "flip-per-site"


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(seq))


def trajectory_step(
    state: SpinorField,
    coin: CoinOperator,
    model: DecoherenceModel,
    mode: UnravelingMode | str,
    rng: np.random.Generator,
) -> SpinorField:
    """One stochastic step; the output is always normalized."""
    mode = UnravelingMode(mode)
    moved = unitary_step(state, coin)
    sites = moved.sites
    right = sites >= 0
    amps = moved.amplitudes.copy()
    p = model.p

    if mode is UnravelingMode.FLIP_GLOBAL:
        if rng.random() < p:
            amps[right, 1] *= -1
    elif mode is UnravelingMode.FLIP_PER_SITE:
        occupied = np.flatnonzero(right & np.any(amps != 0, axis=1))
        hit = occupied[rng.random(occupied.size) < p]
        amps[hit, 1] *= -1
    else:
        q = float((np.abs(amps[right]) ** 2).sum())
        if rng.random() < p * q:
            assert q > 0.0, "dephasing branch drawn with no weight on x >= 0"
            amps[~right] = 0
            amps[right, 1] *= -1
            amps /= math.sqrt(q)
        elif p > 0.0:
            amps[right] *= math.sqrt(1.0 - p)
            amps /= math.sqrt(1.0 - p * q)
    return SpinorField(moved.window, amps)


@dataclass(frozen=True)
class EnsembleConfig:
    trajectories: int = 100
    steps: int = 2000
    master_seed: int = 0
    mode: UnravelingMode = UnravelingMode.FLIP_GLOBAL

    def __post_init__(self):
        if self.trajectories < 1:
            raise InvalidArgument("an ensemble needs at least one trajectory")
        if self.steps < 0:
            raise InvalidArgument("steps must be non-negative")
        if not (0 <= self.master_seed < 2**64):
            raise InvalidArgument("master_seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "mode", UnravelingMode(self.mode))


@dataclass
class EnsembleAccumulator:
    """Per-step sums of trajectory observables, merged in trajectory order."""

    window: LatticeWindow
    steps: int
    recorded: tuple[int, ...]
    count: int = 0
    position_sums: np.ndarray = field(default=None, repr=False)
    x_sums: np.ndarray = field(default=None, repr=False)
    x2_sums: np.ndarray = field(default=None, repr=False)
    pi_l_sums: np.ndarray = field(default=None, repr=False)
    pi_r_sums: np.ndarray = field(default=None, repr=False)
    q_sums: np.ndarray = field(default=None, repr=False)
    # per-trajectory first and second moments, shape (N, steps + 1), only on request
    moments: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        size = self.steps + 1
        if self.position_sums is None:
            self.position_sums = np.zeros((len(self.recorded), self.window.size))
        for name in ("x_sums", "x2_sums", "pi_l_sums", "pi_r_sums", "q_sums"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(size))

    def merge(self, other: "EnsembleAccumulator") -> None:
        self.count += other.count
        self.position_sums += other.position_sums
        self.x_sums += other.x_sums
        self.x2_sums += other.x2_sums
        self.pi_l_sums += other.pi_l_sums
        self.pi_r_sums += other.pi_r_sums
        self.q_sums += other.q_sums
        if other.moments is not None:
            if self.moments is None:
                self.moments = other.moments
            else:
                self.moments = tuple(np.concatenate([m, o]) for m, o in zip(self.moments, other.moments))

    @property
    def sites(self) -> np.ndarray:
        return self.window.sites()

    def mean_positions(self, t: int) -> np.ndarray:
        try:
            row = self.recorded.index(t)
        except ValueError:
            raise NotRecorded(f"position distribution at t={t} was not recorded") from None
        return self.position_sums[row] / self.count

    def mean_gcd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.pi_l_sums / self.count, self.pi_r_sums / self.count, self.q_sums / self.count

    def mean_moments(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x_sums / self.count, self.x2_sums / self.count

    def digest_arrays(self) -> list[np.ndarray]:
        return [self.position_sums, self.x_sums, self.x2_sums, self.pi_l_sums, self.pi_r_sums, self.q_sums]


def _record_times(steps: int, record) -> tuple[int, ...]:
    if record == "all":
        return tuple(range(steps + 1))
    if record == "final":
        return (steps,)
    times = tuple(sorted(set(int(t) for t in record)))
    if any(t < 0 or t > steps for t in times):
        raise InvalidArgument(f"recorded times must lie in [0, {steps}]")
    return times


def _run_batch(initial, coin, model, config, indices, window, recorded, keep_moments) -> EnsembleAccumulator:
    acc = EnsembleAccumulator(window, config.steps, recorded)
    nb = len(indices)
    steps = config.steps
    mode = config.mode
    p = model.p
    c, s = coin.cos, coin.sin
    sites = window.sites().astype(float)
    right = window.sites() >= 0
    origin = initial.position - window.min_x
    rngs = [trajectory_rng(config.master_seed, i) for i in indices]
    if mode is not UnravelingMode.FLIP_PER_SITE:
        draws = np.stack([rng.random(steps) for rng in rngs]) if steps else np.zeros((nb, 0))

    a = np.zeros((nb, window.size), dtype=complex)
    b = np.zeros((nb, window.size), dtype=complex)
    a[:, origin], b[:, origin] = initial.chirality
    record_row = {t: i for i, t in enumerate(recorded)}
    if keep_moments:
        first = np.empty((nb, steps + 1))
        second = np.empty((nb, steps + 1))

    for t in range(steps + 1):
        if t:
            na = np.zeros_like(a)
            nb_ = np.zeros_like(b)
            na[:, :-1] = c * a[:, 1:] + s * b[:, 1:]
            nb_[:, 1:] = s * a[:, :-1] - c * b[:, :-1]
            a, b = na, nb_
            if mode is UnravelingMode.FLIP_GLOBAL:
                flip = draws[:, t - 1] < p
                if flip.any():
                    b[np.ix_(flip, right)] *= -1
            elif mode is UnravelingMode.FLIP_PER_SITE:
                occupied = right & ((a != 0) | (b != 0))
                for row, rng in enumerate(rngs):
                    cols = np.flatnonzero(occupied[row])
                    hit = cols[rng.random(cols.size) < p]
                    b[row, hit] *= -1
            else:
                weight_right = (np.abs(a[:, right]) ** 2 + np.abs(b[:, right]) ** 2).sum(axis=1)
                jump = draws[:, t - 1] < p * weight_right
                stay = ~jump
                if jump.any():
                    scale = 1.0 / np.sqrt(weight_right[jump])
                    rows = np.nonzero(jump)[0]
                    a[np.ix_(rows, ~right)] = 0
                    b[np.ix_(rows, ~right)] = 0
                    b[np.ix_(rows, right)] *= -1
                    a[rows] *= scale[:, None]
                    b[rows] *= scale[:, None]
                if p > 0.0 and stay.any():
                    rows = np.nonzero(stay)[0]
                    damp = math.sqrt(1.0 - p)
                    a[np.ix_(rows, right)] *= damp
                    b[np.ix_(rows, right)] *= damp
                    scale = 1.0 / np.sqrt(1.0 - p * weight_right[stay])
                    a[rows] *= scale[:, None]
                    b[rows] *= scale[:, None]

        prob_l = np.abs(a) ** 2
        prob_r = np.abs(b) ** 2
        probs = prob_l + prob_r
        norms = probs.sum(axis=1)
        if np.any(np.abs(norms - 1.0) > _NORM_TOLERANCE):
            raise InvariantViolation(f"trajectory norm drifted at t={t}: worst {norms.max()!r}")
        mean_x = probs @ sites
        mean_x2 = probs @ (sites * sites)
        acc.x_sums[t] = mean_x.sum()
        acc.x2_sums[t] = mean_x2.sum()
        acc.pi_l_sums[t] = prob_l.sum()
        acc.pi_r_sums[t] = prob_r.sum()
        acc.q_sums[t] = (a * b.conj()).real.sum()
        if t in record_row:
            acc.position_sums[record_row[t]] = probs.sum(axis=0)
        if keep_moments:
            first[:, t] = mean_x
            second[:, t] = mean_x2

    acc.count = nb
    if keep_moments:
        acc.moments = (first, second)
    return acc


def run_ensemble(
    initial: InitialState,
    coin: CoinOperator,
    model: DecoherenceModel,
    config: EnsembleConfig,
    *,
    threads: int = 1,
    record="all",
    keep_moments: bool = False,
) -> EnsembleAccumulator:
    """Average ``config.trajectories`` unraveled trajectories.

    Work is split into fixed batches of :data:`BATCH_SIZE` consecutive
    trajectory indices; batch partials are merged in index order, so the result
    is bitwise independent of ``threads``.  ``record`` selects the steps whose
    position distribution is kept: ``"all"``, ``"final"`` or an iterable.
    """
    window = LatticeWindow.around(initial.position, config.steps)
    recorded = _record_times(config.steps, record)
    batches = [range(lo, min(lo + BATCH_SIZE, config.trajectories))
               for lo in range(0, config.trajectories, BATCH_SIZE)]

    def work(indices):
        return _run_batch(initial, coin, model, config, indices, window, recorded, keep_moments)

    total = EnsembleAccumulator(window, config.steps, recorded)
    if threads <= 1:
        for indices in batches:
            total.merge(work(indices))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for partial in pool.map(work, batches):
                total.merge(partial)
    return total


@dataclass(frozen=True)
class ModeDeviation:
    mode: str
    trajectories: int
    positions: float  # max over (t, x) of |averaged P - exact P|
    pi_l: float
    pi_r: float
    q: float
    noise_floor: float  # sqrt(1/N)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "trajectories": self.trajectories,
            "position_deviation": self.positions,
            "pi_L_deviation": self.pi_l,
            "pi_R_deviation": self.pi_r,
            "Q_deviation": self.q,
            "noise_floor": self.noise_floor,
            "position_deviation_over_floor": self.positions / self.noise_floor,
        }


def compare_unravelings(
    initial: InitialState,
    coin: CoinOperator,
    model: DecoherenceModel,
    steps: int,
    trajectories: int,
    *,
    modes=tuple(UnravelingMode),
    master_seed: int = 0,
    threads: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> list[ModeDeviation]:
    """Per-mode deviation of ensemble averages from the exact channel."""
    exact = evolve_channel(
        initial, coin, model, steps,
        {"P": lambda t, rho: (rho.sites, rho.position_probabilities()),
         "coin": lambda t, rho: rho.coin_reduced()},
        memory_budget=memory_budget,
    )
    window = LatticeWindow.around(initial.position, steps)
    exact_p = np.zeros((steps + 1, window.size))
    for t, (sites, probs) in enumerate(exact.records["P"]):
        exact_p[t, sites - window.min_x] = probs
    coin_rho = np.array(exact.records["coin"])
    exact_pl, exact_pr, exact_q = coin_rho[:, 0, 0].real, coin_rho[:, 1, 1].real, coin_rho[:, 0, 1].real

    report = []
    for mode in modes:
        mode = UnravelingMode(mode)
        acc = run_ensemble(initial, coin, model, EnsembleConfig(trajectories, steps, master_seed, mode),
                           threads=threads)
        mean_p = acc.position_sums / acc.count
        pl, pr, q = acc.mean_gcd()
        report.append(ModeDeviation(
            mode=mode.value,
            trajectories=trajectories,
            positions=float(np.abs(mean_p - exact_p).max()),
            pi_l=float(np.abs(pl - exact_pl).max()),
            pi_r=float(np.abs(pr - exact_pr).max()),
            q=float(np.abs(q - exact_q).max()),
            noise_floor=math.sqrt(1.0 / trajectories),
        ))
    return report
