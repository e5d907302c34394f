"""Construction, validation and serialization of the fixed dictionary.

The dictionary is the frozen, ordered set of kernel centers the filter is
built on.  It is chosen before any adaptation and never changes afterwards.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .kernels import GaussianKernel

NEAR_DUPLICATE_COHERENCE = 0.999


@dataclass(frozen=True)
class Dictionary:
    """Ordered set of M kernel centers in R^L.

    All centers share one dimension and no two centers may coincide exactly:
    duplicated centers make the kernelized-input correlation matrix singular
    in exact arithmetic.
    """

    centers: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1:
            raise DimensionMismatchError(
                f"centers must be a (M, L) array with M >= 1, got shape {c.shape}"
            )
        for i in range(c.shape[0]):
            same = np.all(c[i + 1 :] == c[i], axis=1)
            if same.any():
                j = i + 1 + int(np.argmax(same))
                raise ValueError(f"centers {i} and {j} are identical")
        object.__setattr__(self, "centers", c)

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def dimension(self) -> int:
        return self.centers.shape[1]

    @classmethod
    def from_grid(cls, lower, upper, points_per_axis) -> "Dictionary":
        """Cartesian-product grid, ordered lexicographically by axis index.

        Axis 0 varies slowest, the last axis fastest, so for a 2-D grid the
        centers run (lower0, lower1), (lower0, ...), ..., (upper0, upper1).
        """
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        points = np.atleast_1d(np.asarray(points_per_axis, dtype=int))
        if not lower.shape == upper.shape == points.shape:
            raise DimensionMismatchError(
                f"lower {lower.shape}, upper {upper.shape} and points {points.shape} must agree"
            )
        if np.any(points < 1):
            raise ValueError("points_per_axis must all be >= 1")
        if np.any(lower > upper) or np.any((lower == upper) & (points > 1)):
            raise ValueError("need lower < upper on every axis with more than one point")
        axes = [np.linspace(lo, up, int(p)) for lo, up, p in zip(lower, upper, points)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(np.stack([m.ravel() for m in mesh], axis=1))

    @classmethod
    def from_coherence(cls, stream, kernel: GaussianKernel, mu0: float) -> "Dictionary":
        """Sequential coherence admission.

        The first stream element is always admitted; a later sample joins the
        dictionary only if its maximum kernel value against the current
        centers does not exceed mu0.  Admission order is preserved.
        """
        if not 0.0 <= mu0 < 1.0:
            raise ValueError(f"mu0 must lie in [0, 1), got {mu0}")
        stream = np.asarray(stream, dtype=float)
        if stream.ndim != 2 or stream.shape[0] < 1:
            raise DimensionMismatchError(
                f"stream must be a nonempty (N, L) array, got shape {stream.shape}"
            )
        return cls(_admit(stream, kernel, mu0))

    def save(self, path) -> None:
        """Write `M L` then one center per line, 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.size} {self.dimension}\n")
            for row in self.centers:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def load(cls, path) -> "Dictionary":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"malformed dictionary header in {path}")
            m, l = int(header[0]), int(header[1])
            values = [float(v) for v in fh.read().split()]
        if len(values) != m * l:
            raise DimensionMismatchError(
                f"{path} promised {m}x{l} centers but contains {len(values)} values"
            )
        return cls(np.asarray(values, dtype=float).reshape(m, l))


@dataclass(frozen=True)
class DictionaryDiagnostics:
    min_pairwise_distance: float
    max_coherence: float
    gram_condition_number: float
    near_duplicates: tuple
    flagged: bool

    def __str__(self):
        lines = [
            f"min_pairwise_distance = {self.min_pairwise_distance:.6g}",
            f"max_coherence = {self.max_coherence:.6g}",
            f"gram_condition_number = {self.gram_condition_number:.6g}",
            f"near_duplicates = {len(self.near_duplicates)}",
        ]
        return "\n".join(lines)


def validate(dictionary: Dictionary, kernel: GaussianKernel) -> DictionaryDiagnostics:
    """Report pairwise distance, coherence and Gram conditioning diagnostics.

    With a single center, coherence is undefined and reported as 0.
    Pairs with coherence above 0.999 are flagged as near-duplicates.
    """
    c = dictionary.centers
    m = dictionary.size
    gram = kernel.pairwise(c, c)
    cond = float(np.linalg.cond(gram))
    if m == 1:
        return DictionaryDiagnostics(np.inf, 0.0, cond, (), False)
    iu, ju = np.triu_indices(m, k=1)
    dists = np.linalg.norm(c[iu] - c[ju], axis=1)
    coh = gram[iu, ju]
    dup_mask = coh > NEAR_DUPLICATE_COHERENCE
    dups = tuple(zip(iu[dup_mask].tolist(), ju[dup_mask].tolist()))
    return DictionaryDiagnostics(
        min_pairwise_distance=float(dists.min()),
        max_coherence=float(coh.max()),
        gram_condition_number=cond,
        near_duplicates=dups,
        flagged=bool(dup_mask.any()),
    )


def _admit(stream: np.ndarray, kernel: GaussianKernel, mu0: float) -> np.ndarray:
    """Coherence admission loop; returns the admitted centers in order."""
    n, dim = stream.shape
    centers = np.empty((n, dim))
    centers[0] = stream[0]
    count = 1
    inv = 1.0 / (2.0 * kernel.bandwidth**2)
    for x in stream[1:]:
        d2_min = np.min(np.sum((centers[:count] - x) ** 2, axis=1))
        if np.exp(-d2_min * inv) <= mu0:
            centers[count] = x
            count += 1
    return centers[:count].copy()


def coherence_threshold_for_size(
    stream, kernel: GaussianKernel, target_size: int, iters: int = 60
) -> tuple[float, Dictionary]:
    """Find a coherence threshold whose dictionary has exactly target_size centers.

    Dictionary size is roughly monotone in mu0, but admitting one extra
    center can cascade and reject later samples, so the size profile has
    plateaus and small non-monotone pockets.  Bisection brackets the main
    size boundary, then progressively finer scans around it locate a
    threshold with the exact target size.
    """
    stream = np.asarray(stream, dtype=float)

    def size_at(mu):
        return _admit(stream, kernel, float(mu)).shape[0]

    lo, hi = 0.0, 1.0 - 1e-9
    if size_at(hi) < target_size:
        raise ValueError(
            f"stream of {stream.shape[0]} samples cannot reach {target_size} centers"
        )
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if size_at(mid) < target_size:
            lo = mid
        else:
            hi = mid
    if size_at(hi) == target_size:
        return hi, Dictionary.from_coherence(stream, kernel, hi)
    scan_lo = max(0.0, lo - 0.05)
    scan_hi = min(1.0 - 1e-9, hi + 0.05)
    for points in (101, 401, 1601):
        for mu in np.linspace(scan_lo, scan_hi, points):
            if size_at(mu) == target_size:
                return float(mu), Dictionary.from_coherence(stream, kernel, float(mu))
    raise ValueError(f"no threshold with exactly {target_size} centers found")
