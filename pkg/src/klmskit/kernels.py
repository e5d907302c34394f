"""Gaussian kernel evaluation."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaussianKernel:
    """Gaussian (RBF) kernel exp(-||x - y||^2 / (2 sigma^2)).

    Parameters
    ----------
    bandwidth : float
        Kernel width sigma, in the same length units as the input
        coordinates. Must be positive.
    """

    bandwidth: float

    def __post_init__(self):
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")

    def __call__(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d2 = float(np.sum((x - y) ** 2))
        return float(np.exp(-d2 / (2.0 * self.bandwidth**2)))

    def column(self, x, centers: np.ndarray) -> np.ndarray:
        """Kernel values between a single point x and each row of centers."""
        x = np.asarray(x, dtype=float)
        d2 = np.sum((centers - x) ** 2, axis=1)
        return np.exp(-d2 / (2.0 * self.bandwidth**2))

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Kernel matrix between rows of a and rows of b.

        Uses the expansion ||u - v||^2 = ||u||^2 + ||v||^2 - 2 u.v so large
        batches go through one GEMM instead of a broadcast cube.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d2 = (
            np.sum(a**2, axis=1)[:, None]
            + np.sum(b**2, axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        np.maximum(d2, 0.0, out=d2)
        return np.exp(-d2 / (2.0 * self.bandwidth**2))
