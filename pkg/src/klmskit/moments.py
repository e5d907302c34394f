"""Closed-form Gaussian moments of kernel products.

Everything here reduces to one fact: for a zero-mean Gaussian vector with
covariance R and the quadratic form z = x'Hx + b'x, the moment generating
function E{exp(s z)} has a closed form.  Products of Gaussian-kernel
evaluations at fixed centers are exactly of that shape, which gives exact
expressions for the second- and fourth-order kernel moments that drive the
filter's convergence model.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from .errors import DimensionMismatchError, IllConditionedError, SingularMatrixError

MAX_CONDITION = 1e12


def weighted_norm_sq(v: np.ndarray, a: np.ndarray) -> float:
    """Weighted squared norm v' A v."""
    v = np.asarray(v, dtype=float)
    return float(v @ (np.asarray(a, dtype=float) @ v))


def _check_symmetric(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > 1e-10 * scale:
        raise ValueError(f"{name} must be symmetric")
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class InputModel:
    """Zero-mean Gaussian input law: dimension, covariance, optional AR(1) origin.

    The covariance must be symmetric positive definite with condition number
    at most 1e12; a degenerate input law is rejected at construction.
    """

    dimension: int
    autocorrelation: np.ndarray
    rho: float | None = None
    sigma_x: float | None = None

    def __post_init__(self):
        r = _check_symmetric(self.autocorrelation, "autocorrelation")
        if r.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"autocorrelation is {r.shape[0]}x{r.shape[0]} but dimension={self.dimension}"
            )
        evals = eigh(r, eigvals_only=True)
        if evals[0] <= 0:
            raise SingularMatrixError(
                f"autocorrelation must be positive definite (min eigenvalue {evals[0]:.3e})"
            )
        if evals[-1] / evals[0] > MAX_CONDITION:
            raise IllConditionedError(
                f"autocorrelation condition number {evals[-1] / evals[0]:.3e} exceeds {MAX_CONDITION:.0e}"
            )
        object.__setattr__(self, "autocorrelation", r)

    @classmethod
    def ar1(cls, rho: float, sigma_x: float, dimension: int = 2) -> "InputModel":
        """Stationary AR(1) time embedding: R[i, j] = sigma_x^2 rho^|i-j|."""
        if not -1.0 < rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {rho}")
        if sigma_x <= 0:
            raise ValueError(f"sigma_x must be positive, got {sigma_x}")
        lags = np.abs(np.subtract.outer(np.arange(dimension), np.arange(dimension)))
        r = sigma_x**2 * rho**lags
        return cls(dimension=dimension, autocorrelation=r, rho=rho, sigma_x=sigma_x)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n vectors from N(0, autocorrelation)."""
        chol = np.linalg.cholesky(self.autocorrelation)
        return rng.standard_normal((n, self.dimension)) @ chol.T


@dataclass(frozen=True)
class QuadraticFormSpec:
    """Quadratic form z = x' H x + b' x of a Gaussian vector x."""

    H: np.ndarray
    b: np.ndarray
    s: float

    def __post_init__(self):
        h = _check_symmetric(self.H, "H")
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if b.shape[0] != h.shape[0]:
            raise DimensionMismatchError(
                f"b has length {b.shape[0]} but H is {h.shape[0]}x{h.shape[0]}"
            )
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "b", b)


def _sym_sqrt(r: np.ndarray) -> np.ndarray:
    evals, vecs = eigh(r)
    if evals[0] <= 0:
        raise SingularMatrixError("covariance must be positive definite")
    return (vecs * np.sqrt(evals)) @ vecs.T


def mgf_quadratic(spec: QuadraticFormSpec, r_xx: np.ndarray) -> float:
    """Moment generating function E{exp(s (x'Hx + b'x))} for x ~ N(0, R).

    Evaluates |I - 2sHR|^(-1/2) * exp((s^2/2) b'R(I - 2sHR)^(-1) b) through
    the congruent symmetric matrix I - 2s R^(1/2) H R^(1/2), whose Cholesky
    factorization both certifies existence (all pivots positive) and yields
    the determinant.

    Raises
    ------
    SingularMatrixError
        If I - 2sHR fails the positivity check, i.e. the expectation does
        not exist for this s.
    """
    r = _check_symmetric(r_xx, "r_xx")
    if r.shape[0] != spec.H.shape[0]:
        raise DimensionMismatchError(
            f"r_xx is {r.shape[0]}x{r.shape[0]} but H is {spec.H.shape[0]}x{spec.H.shape[0]}"
        )
    root = _sym_sqrt(r)
    m_sym = np.eye(r.shape[0]) - 2.0 * spec.s * (root @ spec.H @ root)
    m_sym = 0.5 * (m_sym + m_sym.T)
    try:
        factor = cho_factor(m_sym)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(
            "I - 2sHR is not positive definite; the expectation does not exist for this s"
        ) from exc
    log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
    rb = root @ spec.b
    exponent = 0.5 * spec.s**2 * float(rb @ cho_solve(factor, rb))
    return float(np.exp(-0.5 * log_det + exponent))


def _product_moment_parts(kernel, input_model: InputModel, order: int):
    """Shared pieces for an order-kernel product moment.

    Returns (det_factor, cho_factor of (R + sigma^2/order I), R).  The
    weighted norm in the closed form is evaluated by solving
    (R + sigma^2/order I) u = R xbar, never by forming a matrix inverse.
    """
    sigma2 = kernel.bandwidth**2
    r = input_model.autocorrelation
    L = input_model.dimension
    scaled = np.eye(L) + (order / sigma2) * r
    det_factor = float(np.linalg.det(scaled)) ** -0.5
    factor = cho_factor(r + (sigma2 / order) * np.eye(L))
    return det_factor, factor, r


def _product_moment(center_sum, sq_norm_sum, kernel, input_model, order):
    det_factor, factor, r = _product_moment_parts(kernel, input_model, order)
    xbar = np.asarray(center_sum, dtype=float)
    w = float(xbar @ cho_solve(factor, r @ xbar))
    sigma2 = kernel.bandwidth**2
    return det_factor * np.exp(-(order * sq_norm_sum - w) / (2.0 * order * sigma2))


def kernel_correlation_entry(i, j, dictionary, kernel, input_model) -> float:
    """Entry (i, j) of E{k(x) k(x)'}: the expected product of two kernel values."""
    centers = dictionary.centers
    m = centers.shape[0]
    if not (0 <= i < m and 0 <= j < m):
        raise DimensionMismatchError(f"indices ({i}, {j}) out of range for M={m}")
    if centers.shape[1] != input_model.dimension:
        raise DimensionMismatchError("dictionary and input model dimensions differ")
    xbar = centers[i] + centers[j]
    q = float(centers[i] @ centers[i] + centers[j] @ centers[j])
    return float(_product_moment(xbar, q, kernel, input_model, order=2))


def kernel_correlation_matrix(dictionary, kernel, input_model) -> np.ndarray:
    """Correlation matrix of the kernelized input given the dictionary.

    The upper triangle is computed once and mirrored, so the result is
    symmetric bit-exactly.
    """
    centers = dictionary.centers
    m = centers.shape[0]
    if centers.shape[1] != input_model.dimension:
        raise DimensionMismatchError("dictionary and input model dimensions differ")
    det_factor, factor, r = _product_moment_parts(kernel, input_model, order=2)
    sigma2 = kernel.bandwidth**2
    iu, ju = np.triu_indices(m)
    sums = centers[iu] + centers[ju]
    sq = np.sum(centers**2, axis=1)
    qs = sq[iu] + sq[ju]
    w = np.einsum("nl,nl->n", sums, cho_solve(factor, (r @ sums.T)).T)
    vals = det_factor * np.exp(-(2.0 * qs - w) / (4.0 * sigma2))
    out = np.zeros((m, m))
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def fourth_moment_entry(i, j, l, p, dictionary, kernel, input_model) -> float:
    """Expected product of four kernel values at dictionary indices (i, j, l, p)."""
    centers = dictionary.centers
    m = centers.shape[0]
    for idx in (i, j, l, p):
        if not 0 <= idx < m:
            raise DimensionMismatchError(f"index {idx} out of range for M={m}")
    xbar = centers[i] + centers[j] + centers[l] + centers[p]
    q = float(sum(centers[k] @ centers[k] for k in (i, j, l, p)))
    return float(_product_moment(xbar, q, kernel, input_model, order=4))


def fourth_moment_matrix(dictionary, kernel, input_model) -> np.ndarray:
    """All fourth-order kernel moments, arranged as an M^2 x M^2 matrix.

    Row t = i + j*M and column u = l + p*M (0-based, column-stacking order)
    hold E{k_i k_j k_l k_p}.  This is exactly the eta^2 block of the
    covariance transition operator, and it is symmetric by construction
    because the entry depends on (i, j, l, p) only through the sum of the
    four centers.
    """
    centers = dictionary.centers
    m = centers.shape[0]
    if centers.shape[1] != input_model.dimension:
        raise DimensionMismatchError("dictionary and input model dimensions differ")
    det_factor, factor, r = _product_moment_parts(kernel, input_model, order=4)
    sigma2 = kernel.bandwidth**2
    idx = np.arange(m)
    ii = np.tile(idx, m)          # i fastest: t = i + j*M
    jj = np.repeat(idx, m)
    pair_sums = centers[ii] + centers[jj]            # (M^2, L)
    sq = np.sum(centers**2, axis=1)
    pair_sq = sq[ii] + sq[jj]                        # (M^2,)
    solved = cho_solve(factor, (r @ pair_sums.T)).T  # (M^2, L)
    cross = pair_sums @ solved.T                     # s_t' B s_u
    diag = np.einsum("nl,nl->n", pair_sums, solved)
    quad = diag[:, None] + diag[None, :] + 2.0 * cross
    qq = pair_sq[:, None] + pair_sq[None, :]
    out = det_factor * np.exp(-(4.0 * qq - quad) / (8.0 * sigma2))
    return 0.5 * (out + out.T)
