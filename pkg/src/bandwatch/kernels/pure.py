"""Reference numpy implementation of the sampling kernels.

Both kernel backends honour one contract: given the same
``numpy.random.Generator`` they consume the underlying bit stream
identically, draw for draw, and every derived statistic (winner counts,
column maxima) is produced by the same IEEE operations.  Engine output
therefore does not depend on which backend is active.
"""

from __future__ import annotations

import numpy as np

NAME = "pure"


def sample_row(gen: np.random.Generator, alphas: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """One Beta(alpha_i, beta_i) draw per model; shape ``(k,)``."""
    return gen.beta(alphas, betas)


def mc_matrix(
    gen: np.random.Generator, alphas: np.ndarray, betas: np.ndarray, g: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw a ``(k, g)`` Beta matrix plus per-column winner statistics.

    Returns ``(matrix, counts, colmax)`` where ``counts[i]`` is the number
    of columns whose maximum sits in row ``i`` (ties go to the lowest row)
    and ``colmax`` holds the column-wise maxima.  Rows are filled in row-major
    order so the stream position after the call matches an element-wise loop.
    """
    k = alphas.shape[0]
    matrix = gen.beta(alphas[:, None], betas[:, None], size=(k, g))
    winners = np.argmax(matrix, axis=0)
    counts = np.bincount(winners, minlength=k)
    colmax = matrix.max(axis=0)
    return matrix, counts, colmax
