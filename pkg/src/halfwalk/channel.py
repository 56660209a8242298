"""Exact evolution of the density operator under the half-line dephasing channel.

The channel uses two Kraus operators built on the walk unitary U:

    E1 = sqrt(1 - p*theta(x)) U,    E2 = sqrt(p) theta(x) sigma_z U,

with theta(x) = 1 for x >= 0.  The position weights act after U, on the
post-shift site.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numba

numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
import numpy as np

from .blocks import CoinBlockMatrix
from .errors import BudgetExceeded, InvalidArgument, InvariantViolation
from .lattice import CoinOperator, InitialState, LatticeWindow, SpinorField

#: Site 0 belongs to the dephasing half-line.
THETA_AT_ZERO = 1

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)

DEFAULT_PRUNE_THRESHOLD = 1e-16
DEFAULT_MEMORY_BUDGET = 256 * 2**20
# old + new block arrays plus slack for observer temporaries
_WORKING_COPIES = 3
_BYTES_PER_BLOCK = 4 * 16


def theta(x):
    """Indicator of the dephasing region (x >= 0), vectorized."""
    return (np.asarray(x) >= 0).astype(float)


@dataclass(frozen=True)
class DecoherenceModel:
    """sigma_z dephasing with probability ``p`` on sites x >= 0."""

    p: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise InvalidArgument(f"p must lie in [0, 1], got {self.p!r}")

    def weights(self, sites: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-site ``sqrt(1 - p theta)`` and ``theta``."""
        th = theta(sites)
        return np.sqrt(1.0 - self.p * th), th


def conditional_factors(coin: CoinOperator) -> tuple[np.ndarray, np.ndarray]:
    """``(M_L, M_R) = (|L><L| K, |R><R| K)``."""
    k = coin.matrix
    m_left = np.zeros((2, 2), dtype=complex)
    m_right = np.zeros((2, 2), dtype=complex)
    m_left[0] = k[0]
    m_right[1] = k[1]
    return m_left, m_right


# -- Kraus operators on a finite window ---------------------------------------


def walk_unitary_matrix(coin: CoinOperator, window: LatticeWindow) -> np.ndarray:
    """Dense U on ``window`` (basis index 2*(x - min_x) + coin); truncated at the edges."""
    n = window.size
    k = coin.matrix
    u = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        for d in range(2):
            col = 2 * j + d
            if j - 1 >= 0:
                u[2 * (j - 1), col] = k[0, d]
            if j + 1 < n:
                u[2 * (j + 1) + 1, col] = k[1, d]
    return u


def kraus_matrices(model: DecoherenceModel, coin: CoinOperator, window: LatticeWindow) -> tuple[np.ndarray, np.ndarray]:
    sites = window.sites()
    w, th = model.weights(sites)
    u = walk_unitary_matrix(coin, window)
    w_op = np.repeat(w, 2)
    z_op = np.repeat(th, 2) * np.tile([1.0, -1.0], window.size)
    e1 = w_op[:, None] * u
    e2 = math.sqrt(model.p) * z_op[:, None] * u
    return e1, e2


@dataclass(frozen=True)
class CompletenessReport:
    """Residuals of both dagger orderings of the completeness sum, interior sites only."""

    dagger_left: float  # max |E1^+ E1 + E2^+ E2 - 1|
    dagger_right: float  # max |E1 E1^+ + E2 E2^+ - 1|

    @property
    def max_deviation(self) -> float:
        return max(self.dagger_left, self.dagger_right)


def kraus_completeness_check(model: DecoherenceModel, coin: CoinOperator, window: LatticeWindow) -> CompletenessReport:
    if window.max_x - window.min_x < 2:
        raise InvalidArgument("window needs at least one interior site (max_x - min_x >= 2)")
    e1, e2 = kraus_matrices(model, coin, window)
    eye = np.eye(e1.shape[0])
    interior = np.arange(2, 2 * (window.size - 1))
    sub = np.ix_(interior, interior)
    left = e1.conj().T @ e1 + e2.conj().T @ e2 - eye
    right = e1 @ e1.conj().T + e2 @ e2.conj().T - eye
    return CompletenessReport(float(np.abs(left[sub]).max()), float(np.abs(right[sub]).max()))


# -- block-form channel step --------------------------------------------------


@numba.njit(parallel=True, cache=True)
def _channel_kernel(old, shift, c, s, w, th, p, prune):
    n_old = old.shape[0]
    n = n_old + shift
    out = np.zeros((n, 2, n, 2), dtype=np.complex128)
    cc, cs, ss = c * c, c * s, s * s
    prune2 = prune * prune
    for j in numba.prange(n):
        jl = j  # left-mover row came from the same stored index
        jr = j - shift
        row_l = jl < n_old
        row_r = jr >= 0
        for k in range(j, n):
            kl = k
            kr = k - shift
            col_l = kl < n_old
            col_r = kr >= 0
            same = w[j] * w[k] + p * th[j] * th[k]
            cross = w[j] * w[k] - p * th[j] * th[k]
            v00 = v01 = v10 = v11 = 0j
            # (K X K^T)_{ab} with K rows (c, s) and (s, -c)
            if row_l and col_l:
                v00 = same * (cc * old[jl, 0, kl, 0] + cs * (old[jl, 0, kl, 1] + old[jl, 1, kl, 0])
                              + ss * old[jl, 1, kl, 1])
            if row_l and col_r:
                v01 = cross * (cs * old[jl, 0, kr, 0] - cc * old[jl, 0, kr, 1] + ss * old[jl, 1, kr, 0]
                               - cs * old[jl, 1, kr, 1])
            if row_r and col_l:
                v10 = cross * (cs * old[jr, 0, kl, 0] + ss * old[jr, 0, kl, 1] - cc * old[jr, 1, kl, 0]
                               - cs * old[jr, 1, kl, 1])
            if row_r and col_r:
                v11 = same * (ss * old[jr, 0, kr, 0] - cs * (old[jr, 0, kr, 1] + old[jr, 1, kr, 0])
                              + cc * old[jr, 1, kr, 1])
            if prune2 > 0.0:
                m = max(v00.real * v00.real + v00.imag * v00.imag, v01.real * v01.real + v01.imag * v01.imag,
                        v10.real * v10.real + v10.imag * v10.imag, v11.real * v11.real + v11.imag * v11.imag)
                if m < prune2:
                    continue
            if k == j:
                out[j, 0, j, 0] = v00.real
                out[j, 1, j, 1] = v11.real
                out[j, 0, j, 1] = v01
                out[j, 1, j, 0] = np.conj(v01)
            else:
                out[j, 0, k, 0] = v00
                out[j, 0, k, 1] = v01
                out[j, 1, k, 0] = v10
                out[j, 1, k, 1] = v11
                out[k, 0, j, 0] = np.conj(v00)
                out[k, 1, j, 0] = np.conj(v01)
                out[k, 0, j, 1] = np.conj(v10)
                out[k, 1, j, 1] = np.conj(v11)
    return out


def channel_step(
    rho: CoinBlockMatrix,
    coin: CoinOperator,
    model: DecoherenceModel,
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD,
) -> CoinBlockMatrix:
    """rho -> E1 rho E1^+ + E2 rho E2^+ in block form.

    Block (x, y) of U rho U^+ is assembled from blocks (x +- 1, y +- 1); it is
    then scaled by ``sqrt(1-p th_x) sqrt(1-p th_y)`` plus ``p th_x th_y`` times its
    sigma_z conjugate.  Only blocks with x <= y are computed, the rest mirrored.
    """
    if not isinstance(model, DecoherenceModel):
        model = DecoherenceModel(model)
    shift = 2 // rho.stride
    first = rho.first_site - 1
    n_new = rho.n_sites + shift
    sites = first + rho.stride * np.arange(n_new)
    w, th = model.weights(sites)
    data = _channel_kernel(rho.data, shift, coin.cos, coin.sin, w, th, float(model.p), float(prune_threshold))
    return CoinBlockMatrix(first, rho.stride, data)


def estimated_channel_bytes(steps: int, compact: bool = True) -> int:
    sites = steps + 1 if compact else 2 * steps + 1
    return sites * sites * _BYTES_PER_BLOCK * _WORKING_COPIES


def check_budget(steps: int, budget_bytes: int = DEFAULT_MEMORY_BUDGET, compact: bool = True) -> int:
    need = estimated_channel_bytes(steps, compact)
    if need > budget_bytes:
        raise BudgetExceeded(
            f"density evolution over {steps} steps needs about {need / 2**20:.0f} MiB "
            f"(budget {budget_bytes / 2**20:.0f} MiB); raise the memory budget, "
            f"reduce steps, or use a trajectory ensemble mode"
        )
    return need


Observer = Callable[[int, CoinBlockMatrix], object]


@dataclass
class ChannelRun:
    rho: CoinBlockMatrix
    records: dict[str, list]
    traces: np.ndarray


def evolve_channel(
    initial: InitialState,
    coin: CoinOperator,
    model: DecoherenceModel,
    steps: int,
    observers: Mapping[str, Observer] | None = None,
    *,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD,
    trace_tolerance: float = 1e-10,
    threads: int | None = None,
) -> ChannelRun:
    """Apply :func:`channel_step` ``steps`` times starting from |initial><initial|.

    Each observer is called as ``observer(t, rho)`` for t = 0..steps and its
    return values are collected under its name in ``records``.
    """
    if steps < 0:
        raise InvalidArgument(f"steps must be non-negative, got {steps}")
    check_budget(steps, memory_budget)
    observers = dict(observers or {})
    records: dict[str, list] = {name: [] for name in observers}
    traces = np.empty(steps + 1)

    state = SpinorField.localized(initial, LatticeWindow(min(initial.position, 0), max(initial.position, 0)))
    rho = CoinBlockMatrix.from_spinor(state, compact=True)
    previous_threads = numba.get_num_threads()
    if threads is not None:
        numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
    try:
        for t in range(steps + 1):
            if t:
                rho = channel_step(rho, coin, model, prune_threshold)
            traces[t] = rho.trace()
            if abs(traces[t] - 1.0) > trace_tolerance:
                raise InvariantViolation(f"trace drifted to {traces[t]!r} at t={t}")
            for name, observer in observers.items():
                records[name].append(observer(t, rho))
    finally:
        numba.set_num_threads(previous_threads)
    return ChannelRun(rho, records, traces)


def traced_step_terms(
    rho: CoinBlockMatrix,
    coin: CoinOperator,
    model: DecoherenceModel,
    ordering: str = "post-shift",
) -> tuple[np.ndarray, np.ndarray]:
    """``(Tr_s{E1 rho E1^+}, Tr_s{E2 rho E2^+})`` from block sums over M_L, M_R.

    ``ordering="post-shift"`` weights by the site reached after the shift, the
    convention :func:`channel_step` uses, so the two terms add up to the coin
    marginal of its output.  ``ordering="pre-shift"`` weights by the site the
    walker leaves (E1 = U sqrt(1-p theta), E2 = sqrt(p) sigma_z U theta): diagonal
    blocks carry ``1 - p theta(x)`` and the cross blocks ``R_{x-1,x+1}`` carry
    ``sqrt(1-p theta(x+1)) sqrt(1-p theta(x-1))``.
    """
    if ordering not in ("post-shift", "pre-shift"):
        raise InvalidArgument(f"unknown ordering {ordering!r}")
    m_l, m_r = conditional_factors(coin)
    p = model.p
    flat = rho.on_stride_one()
    sites = flat.sites
    diag = flat.diagonal_blocks()
    # cross[i] = R_{x_i, x_i + 2}; its mirror R_{x+2, x} is cross[i]^+
    idx = np.arange(flat.n_sites - 2)
    cross = flat.data[idx, :, idx + 2, :]

    def sandwich(a, blocks, b):
        return np.einsum("ij,njk,lk->nil", a, blocks, b.conj())

    left_moves = sandwich(m_l, diag, m_l)  # lands on x - 1
    right_moves = sandwich(m_r, diag, m_r)  # lands on x + 1
    # M_R R_{x-1,x+1} M_L^+ + M_L R_{x+1,x-1} M_R^+, centred on x = x_i + 1
    interference = sandwich(m_r, cross, m_l)
    interference = interference + interference.conj().transpose(0, 2, 1)
    mid = sites[:-2] + 1

    if ordering == "post-shift":
        keep_diag_l = 1.0 - p * theta(sites - 1)
        keep_diag_r = 1.0 - p * theta(sites + 1)
        keep_cross = 1.0 - p * theta(mid)
        flip_diag_l = p * theta(sites - 1)
        flip_diag_r = p * theta(sites + 1)
        flip_cross = p * theta(mid)
    else:
        keep_diag_l = keep_diag_r = 1.0 - p * theta(sites)
        keep_cross = np.sqrt(1.0 - p * theta(mid + 1)) * np.sqrt(1.0 - p * theta(mid - 1))
        flip_diag_l = flip_diag_r = p * theta(sites)
        flip_cross = p * theta(mid + 1) * theta(mid - 1)

    def weighted(wl, wr, wc):
        return (np.einsum("n,nij->ij", wl, left_moves) + np.einsum("n,nij->ij", wr, right_moves)
                + np.einsum("n,nij->ij", wc, interference))

    kept = weighted(keep_diag_l, keep_diag_r, keep_cross)
    flipped = SIGMA_Z @ weighted(flip_diag_l, flip_diag_r, flip_cross) @ SIGMA_Z
    return kept, flipped
