"""Synthetic traffic-like days with slowly drifting singular subspaces.

Day ``t`` is ``U_t S V_t' + noise`` clipped at zero. The first singular pair
is an all-positive profile carrying most of the energy, so entries are
nonnegative before clipping except in rare corners. Consecutive days rotate
every singular direction by exactly ``theta`` into fresh orthogonal
directions, giving adjacent principal angles equal to ``theta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SyntheticGenerator:
    rows: int = 340
    cols: int = 24
    rank: int = 10
    shared: bool = True
    theta: float = 0.1
    noise: float = 0.0
    seed: int = 0
    level: float = 10.0
    tail: float = 0.1
    decay: float = 0.8

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        if not 1 <= self.rank <= min(self.rows, self.cols):
            raise ValueError("rank must be in [1, min(rows, cols)]")
        if self.shared and 2 * self.rank > min(self.rows, self.cols) and self.theta > 0:
            raise ValueError("drift needs 2 * rank <= min(rows, cols)")
        if not 0.0 <= self.theta <= np.pi / 2:
            raise ValueError("theta must be in [0, pi/2]")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")

    def singular_values(self) -> np.ndarray:
        top = self.level * np.sqrt(self.rows * self.cols)
        rest = top * self.tail * self.decay ** np.arange(self.rank - 1)
        return np.concatenate([[top], rest])


def _positive_frame(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal ``n x r`` frame whose first column is entrywise positive."""
    G = rng.standard_normal((n, r))
    G[:, 0] = np.abs(G[:, 0]) + 2.0
    Q, R = np.linalg.qr(G)
    return Q * np.sign(np.diag(R))


def _rotate(Q: np.ndarray, theta: float, rng: np.random.Generator) -> np.ndarray:
    """Rotate every column of ``Q`` by ``theta`` towards fresh orthogonal directions."""
    if theta == 0.0:
        return Q
    n, r = Q.shape
    G = rng.standard_normal((n, r))
    G -= Q @ (Q.T @ G)
    W, _ = np.linalg.qr(G)
    return Q * np.cos(theta) + W * np.sin(theta)


def generate_synthetic_days(gen: SyntheticGenerator, n_days: int) -> list[np.ndarray]:
    """Deterministic list of ``n_days`` nonnegative ``rows x cols`` matrices."""
    if n_days < 1:
        raise ValueError("n_days must be >= 1")
    rng = np.random.default_rng(gen.seed)
    s = gen.singular_values()
    U = _positive_frame(gen.rows, gen.rank, rng)
    V = _positive_frame(gen.cols, gen.rank, rng)
    days = []
    for t in range(n_days):
        if t > 0:
            if gen.shared:
                U = _rotate(U, gen.theta, rng)
                V = _rotate(V, gen.theta, rng)
            else:
                U = _positive_frame(gen.rows, gen.rank, rng)
                V = _positive_frame(gen.cols, gen.rank, rng)
        L = (U * s) @ V.T
        if gen.noise > 0:
            rms = np.sqrt(np.mean(L**2))
            L = L + gen.noise * rms * rng.standard_normal(L.shape)
        days.append(np.maximum(L, 0.0))
    return days
