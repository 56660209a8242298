"""Independent dense reference implementations used only by the tests.

Everything is built from Kronecker products on an explicit window, with basis
index ``2 * (x - min_x) + coin``; nothing here touches the block kernels.
"""

import math

import numpy as np

PL = np.array([[1, 0], [0, 0]], dtype=complex)
PR = np.array([[0, 0], [0, 1]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def coin(gamma):
    return math.cos(gamma) * SZ + math.sin(gamma) * np.array([[0, 1], [1, 0]], dtype=complex)


def shifts(n):
    """(T_-, T_+) on n sites: T_- |x> = |x - 1>, T_+ |x> = |x + 1>, truncated."""
    t_minus = np.eye(n, k=1, dtype=complex)
    t_plus = np.eye(n, k=-1, dtype=complex)
    return t_minus, t_plus


def walk_unitary(gamma, n):
    k = coin(gamma)
    t_minus, t_plus = shifts(n)
    return np.kron(t_minus, PL @ k) + np.kron(t_plus, PR @ k)


def kraus_pair(gamma, p, sites, ordering="post-shift"):
    n = len(sites)
    th = (np.asarray(sites) >= 0).astype(float)
    u = walk_unitary(gamma, n)
    w = np.kron(np.diag(np.sqrt(1 - p * th)), I2)
    if ordering == "post-shift":
        return w @ u, math.sqrt(p) * np.kron(np.diag(th), SZ) @ u
    return u @ w, math.sqrt(p) * np.kron(np.eye(n), SZ) @ u @ np.kron(np.diag(th), I2)


def apply_channel(rho, gamma, p, sites, ordering="post-shift"):
    e1, e2 = kraus_pair(gamma, p, sites, ordering)
    return e1 @ rho @ e1.conj().T + e2 @ rho @ e2.conj().T


def partial_trace_position(rho):
    n = rho.shape[0] // 2
    r = rho.reshape(n, 2, n, 2)
    return np.einsum("iaib->ab", r)


def random_density(n, rng, rank=3):
    """Random full-rank-ish density matrix on n sites (dimension 2n)."""
    g = rng.normal(size=(2 * n, rank)) + 1j * rng.normal(size=(2 * n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def pad(rho, before, after):
    """Embed a 2n x 2n operator into a window with extra sites on each side."""
    n = rho.shape[0] // 2
    m = n + before + after
    out = np.zeros((2 * m, 2 * m), dtype=complex)
    sl = slice(2 * before, 2 * (before + n))
    out[sl, sl] = rho
    return out


def pure_walk(gamma, chirality, steps, position=0, keep_history=True):
    """Textbook spinor iteration over a dict of sites; returns {x: (a, b)} per step.

    With ``keep_history=False`` only the final state is returned, in a one-item list.
    """
    c, s = math.cos(gamma), math.sin(gamma)
    state = {position: tuple(complex(z) for z in chirality)}
    history = [dict(state)]
    for _ in range(steps):
        new = {}
        for x, (a, b) in state.items():
            la, lb = new.get(x - 1, (0j, 0j))
            new[x - 1] = (la + c * a + s * b, lb)
            ra, rb = new.get(x + 1, (0j, 0j))
            new[x + 1] = (ra, rb + s * a - c * b)
        state = new
        if keep_history:
            history.append(dict(state))
    return history if keep_history else [state]
