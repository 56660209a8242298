"""Density operators stored as 2x2 coin blocks over pairs of lattice sites."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .lattice import LatticeWindow, SpinorField


@dataclass(frozen=True, eq=False)
class CoinBlockMatrix:
    """rho = sum_{x,y} |x><y| (x) R_{x,y}.

    ``data[j, i, k, l]`` is entry ``(i, l)`` of the block ``R_{x_j, x_k}`` with
    ``x_j = first_site + stride * j``.  Walks started on a single site only ever
    occupy one parity class per step, so they are stored with ``stride=2``;
    general matrices use ``stride=1``.
    """

    first_site: int
    stride: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.stride not in (1, 2):
            raise InvalidArgument(f"stride must be 1 or 2, got {self.stride}")
        data = np.ascontiguousarray(self.data, dtype=complex)
        n = data.shape[0]
        if data.shape != (n, 2, n, 2):
            raise InvalidArgument(f"block data must have shape (n, 2, n, 2), got {data.shape}")
        object.__setattr__(self, "data", data)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_spinor(cls, state: SpinorField, *, compact: bool = False) -> "CoinBlockMatrix":
        """|psi><psi|; ``compact`` keeps only the parity class of the occupied sites."""
        sites = state.sites
        amps = state.amplitudes
        stride = 1
        if compact:
            occupied = sites[np.any(amps != 0, axis=1)]
            if occupied.size and np.all((occupied - occupied[0]) % 2 == 0):
                stride = 2
                keep = (sites - occupied[0]) % 2 == 0
                sites, amps = sites[keep], amps[keep]
        n = len(sites)
        data = np.einsum("ja,kb->jakb", amps, amps.conj()).reshape(n, 2, n, 2)
        return cls(int(sites[0]), stride, data)

    @classmethod
    def from_blocks(cls, blocks: dict[tuple[int, int], np.ndarray], window: LatticeWindow) -> "CoinBlockMatrix":
        n = window.size
        data = np.zeros((n, 2, n, 2), dtype=complex)
        for (x, y), block in blocks.items():
            if x not in window or y not in window:
                raise InvalidArgument(f"block ({x}, {y}) outside {window}")
            data[x - window.min_x, :, y - window.min_x, :] = block
        return cls(window.min_x, 1, data)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, window: LatticeWindow) -> "CoinBlockMatrix":
        """Inverse of :meth:`to_matrix` for a stride-1 layout."""
        n = window.size
        return cls(window.min_x, 1, np.asarray(matrix, dtype=complex).reshape(n, 2, n, 2))

    # -- geometry -----------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self.data.shape[0]

    @property
    def sites(self) -> np.ndarray:
        return self.first_site + self.stride * np.arange(self.n_sites)

    @property
    def window(self) -> LatticeWindow:
        last = self.first_site + self.stride * (self.n_sites - 1)
        return LatticeWindow(min(self.first_site, 0), max(last, 0))

    def _index(self, x: int) -> int | None:
        offset = x - self.first_site
        if offset % self.stride:
            return None
        j = offset // self.stride
        return j if 0 <= j < self.n_sites else None

    def block(self, x: int, y: int) -> np.ndarray:
        j, k = self._index(x), self._index(y)
        if j is None or k is None:
            return np.zeros((2, 2), dtype=complex)
        return self.data[j, :, k, :].copy()

    def blocks(self, threshold: float = 0.0) -> dict[tuple[int, int], np.ndarray]:
        """Stored blocks whose largest entry exceeds ``threshold``."""
        mags = np.abs(self.data).max(axis=(1, 3))
        sites = self.sites
        out = {}
        for j, k in zip(*np.nonzero(mags > threshold)):
            out[(int(sites[j]), int(sites[k]))] = self.data[j, :, k, :].copy()
        return out

    # -- observables --------------------------------------------------------

    def diagonal_blocks(self) -> np.ndarray:
        """``R_{x,x}`` for every stored site, shape (n, 2, 2)."""
        idx = np.arange(self.n_sites)
        return self.data[idx, :, idx, :]

    def position_probabilities(self) -> np.ndarray:
        diag = self.diagonal_blocks()
        return (diag[:, 0, 0] + diag[:, 1, 1]).real

    def coin_reduced(self) -> np.ndarray:
        return self.diagonal_blocks().sum(axis=0)

    def trace(self) -> float:
        return float(self.position_probabilities().sum())

    def purity(self) -> float:
        # tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        return float(np.vdot(self.data, self.data).real)

    def to_matrix(self) -> np.ndarray:
        n = self.n_sites
        return self.data.reshape(2 * n, 2 * n)

    def hermiticity_defect(self) -> float:
        m = self.to_matrix()
        return float(np.abs(m - m.conj().T).max())

    def min_eigenvalue(self) -> float:
        """Diagnostic positivity check; dense, intended for small instances."""
        return float(np.linalg.eigvalsh(self.to_matrix()).min())

    def pruned(self, threshold: float) -> "CoinBlockMatrix":
        if threshold <= 0:
            return self
        small = np.abs(self.data).max(axis=(1, 3)) < threshold
        data = self.data.copy()
        data[small[:, None, :, None].repeat(2, 1).repeat(2, 3)] = 0
        return CoinBlockMatrix(self.first_site, self.stride, data)

    def on_stride_one(self) -> "CoinBlockMatrix":
        """Same operator laid out on every site of its window."""
        if self.stride == 1:
            return self
        window = self.window
        n = window.size
        data = np.zeros((n, 2, n, 2), dtype=complex)
        idx = self.sites - window.min_x
        data[np.ix_(idx, [0, 1], idx, [0, 1])] = self.data
        return CoinBlockMatrix(window.min_x, 1, data)


def pure_state_to_blocks(state: SpinorField) -> CoinBlockMatrix:
    """Block form of |psi><psi| on the state's own window."""
    return CoinBlockMatrix.from_spinor(state)
