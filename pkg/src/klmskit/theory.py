"""Convergence model for the Gaussian KLMS filter with a fixed dictionary.

Given the closed-form second- and fourth-order kernel moments, this module
provides the optimal weights and minimum MSE, the mean weight-error
recursion with its step-size bound, the lexicographic (column-stacked)
weight-error covariance recursion driven by the symmetric M^2 x M^2
transition matrix, the mean-square stability test, the steady-state MSE
fixed point, and predicted MSE learning curves.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from .errors import (
    DimensionMismatchError,
    DivergedError,
    IllConditionedError,
    UnstableError,
)
from .moments import (
    MAX_CONDITION,
    fourth_moment_matrix,
    kernel_correlation_matrix,
)

TRACE_DIVERGENCE_CAP = 1e12
DENSE_SIZE_CAP = 80


def vec(c_mat: np.ndarray) -> np.ndarray:
    """Column-stacking (lexicographic) vectorization."""
    return np.asarray(c_mat).flatten(order="F")


def unvec(c_vec: np.ndarray, m: int) -> np.ndarray:
    return np.asarray(c_vec).reshape(m, m, order="F")


# ---------------------------------------------------------------------------
# Optimal solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimalSolution:
    """Wiener solution restricted to the dictionary span.

    cross_correlation is E{y k}, optimal_weights solves the normal equations
    against the closed-form kernel correlation matrix, and min_mse is
    E{y^2} - cross_correlation' optimal_weights (the learning-curve floor).
    bootstrap_se is a block-bootstrap standard error on min_mse.
    """

    cross_correlation: np.ndarray
    optimal_weights: np.ndarray
    min_mse: float
    output_power: float
    bootstrap_se: float


def estimate_optimal(
    dictionary,
    kernel,
    input_model,
    sampler,
    n_samples: int = 1_000_000,
    rng=None,
    n_blocks: int = 100,
    n_bootstrap: int = 200,
) -> OptimalSolution:
    """Estimate the optimal weights and minimum MSE by sample averaging.

    The cross-correlation between the kernelized input and the target has no
    closed form, so it is averaged over `n_samples` draws from `sampler`,
    a callable `(n, rng) -> (X, y)` producing a stationary stream.  The
    normal equations are then solved against the closed-form correlation
    matrix.  Sampling runs in `n_blocks` independent blocks, which also
    provide the block-bootstrap standard error on min_mse.

    Raises
    ------
    IllConditionedError
        If the kernel correlation matrix has condition number above 1e12
        (near-duplicate dictionary centers), or the moment estimates are
        inconsistent enough to produce a negative minimum MSE.
    """
    if n_samples < 100_000:
        raise ValueError(f"n_samples must be at least 1e5, got {n_samples}")
    rkk = kernel_correlation_matrix(dictionary, kernel, input_model)
    evals = eigh(rkk, eigvals_only=True)
    if evals[0] <= 0 or evals[-1] / evals[0] > MAX_CONDITION:
        raise IllConditionedError(
            f"kernel correlation matrix condition number {evals[-1] / max(evals[0], 1e-300):.3e} "
            f"exceeds {MAX_CONDITION:.0e}; check the dictionary for near-duplicate centers"
        )
    rng = np.random.default_rng(rng)
    m = dictionary.size
    block_size = -(-n_samples // n_blocks)
    block_p = np.empty((n_blocks, m))
    block_y2 = np.empty(n_blocks)
    drawn = 0
    for b in range(n_blocks):
        nb = min(block_size, n_samples - drawn)
        x, y = sampler(nb, rng)
        k = kernel.pairwise(np.asarray(x, dtype=float), dictionary.centers)
        block_p[b] = (k.T @ y) / nb
        block_y2[b] = float(y @ y) / nb
        drawn += nb
    weights = np.full(n_blocks, 1.0 / n_blocks)
    p_hat = weights @ block_p
    output_power = float(weights @ block_y2)

    factor = cho_factor(rkk)

    def solve_refined(p):
        a = cho_solve(factor, p)
        return a + cho_solve(factor, p - rkk @ a)

    alpha = solve_refined(p_hat)
    j_min = output_power - float(p_hat @ alpha)
    if j_min < -1e-10:
        raise IllConditionedError(
            f"inconsistent moment estimates produced negative minimum MSE {j_min:.3e}"
        )
    j_min = max(j_min, 0.0)

    boots = np.empty(n_bootstrap)
    for t in range(n_bootstrap):
        idx = rng.integers(0, n_blocks, n_blocks)
        p_b = block_p[idx].mean(axis=0)
        y2_b = block_y2[idx].mean()
        boots[t] = y2_b - float(p_b @ solve_refined(p_b))
    return OptimalSolution(
        cross_correlation=p_hat,
        optimal_weights=alpha,
        min_mse=j_min,
        output_power=output_power,
        bootstrap_se=float(np.std(boots, ddof=1)),
    )


# ---------------------------------------------------------------------------
# Covariance transition operator
# ---------------------------------------------------------------------------

def covariance_transition(rkk: np.ndarray, fourth_moments: np.ndarray, step_size: float) -> np.ndarray:
    """Assemble the M^2 x M^2 covariance transition matrix.

    G = I - eta*(kron(I, R) + kron(R, I)) + eta^2 * fourth_moments, acting on
    column-stacked covariance matrices.  All three parts are symmetric, so G
    is symmetric.
    """
    m = rkk.shape[0]
    if fourth_moments.shape != (m * m, m * m):
        raise DimensionMismatchError(
            f"fourth_moments must be {m * m}x{m * m}, got {fourth_moments.shape}"
        )
    if np.abs(fourth_moments - fourth_moments.T).max() > 1e-12:
        raise DimensionMismatchError("fourth_moments must be symmetric")
    eye_m = np.eye(m)
    g = (
        np.eye(m * m)
        - step_size * (np.kron(eye_m, rkk) + np.kron(rkk, eye_m))
        + step_size**2 * fourth_moments
    )
    return 0.5 * (g + g.T)


@dataclass(frozen=True)
class TheoryModel:
    """Everything needed to run the convergence model at one step size.

    g1 = kron(I, R), g2 = kron(R, I) and g3 (the fourth-moment block) are the
    three symmetric constituents of the transition matrix g.
    """

    rkk: np.ndarray
    optimal: OptimalSolution
    step_size: float
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    g: np.ndarray

    @property
    def size(self) -> int:
        return self.rkk.shape[0]

    @property
    def rkk_vec(self) -> np.ndarray:
        return vec(self.rkk)


def build_theory_model(
    dictionary,
    kernel,
    input_model,
    optimal: OptimalSolution,
    step_size: float,
    max_dense_size: int = DENSE_SIZE_CAP,
) -> TheoryModel:
    """Compute the moment matrices and assemble the transition operator.

    Dense storage is quartic in the dictionary size and is capped at
    `max_dense_size` centers; beyond that use `covariance_step_direct`,
    which applies the recursion in M x M form without materializing G.
    """
    m = dictionary.size
    if m > max_dense_size:
        raise ValueError(
            f"dense transition matrix for M={m} would hold {m**4:.2e} entries; "
            f"raise max_dense_size explicitly or use covariance_step_direct"
        )
    rkk = kernel_correlation_matrix(dictionary, kernel, input_model)
    k4 = fourth_moment_matrix(dictionary, kernel, input_model)
    eye_m = np.eye(m)
    g1 = np.kron(eye_m, rkk)
    g2 = np.kron(rkk, eye_m)
    g = covariance_transition(rkk, k4, step_size)
    return TheoryModel(
        rkk=rkk, optimal=optimal, step_size=step_size, g1=g1, g2=g2, g3=k4, g=g
    )


# ---------------------------------------------------------------------------
# Mean behavior
# ---------------------------------------------------------------------------

def mean_stability_bound(rkk: np.ndarray) -> float:
    """Largest step size for convergence in the mean: 2 / lambda_max."""
    evals = eigh(np.asarray(rkk, dtype=float), eigvals_only=True)
    return 2.0 / float(evals[-1])


def mean_weight_recursion(model: TheoryModel, v0: np.ndarray, horizon: int) -> np.ndarray:
    """Iterate E{v(n+1)} = (I - eta R) E{v(n)} from v0.

    Returns an (horizon + 1, M) array whose row n is the mean weight error
    after n iterations (row 0 is v0).
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (model.size,):
        raise DimensionMismatchError(f"v0 must have length {model.size}")
    a = np.eye(model.size) - model.step_size * model.rkk
    out = np.empty((horizon + 1, model.size))
    out[0] = v0
    for n in range(horizon):
        out[n + 1] = a @ out[n]
    return out


# ---------------------------------------------------------------------------
# Covariance recursion and steady state
# ---------------------------------------------------------------------------

def _check_c0(c0: np.ndarray, m: int) -> np.ndarray:
    c0 = np.asarray(c0, dtype=float)
    if c0.shape != (m, m):
        raise DimensionMismatchError(f"C0 must be {m}x{m}, got {c0.shape}")
    scale = max(1.0, float(np.abs(c0).max()))
    if np.abs(c0 - c0.T).max() > 1e-10 * scale:
        raise ValueError("C0 must be symmetric")
    evals = eigh(0.5 * (c0 + c0.T), eigvals_only=True)
    if evals[0] < -1e-10 * max(evals[-1], 1.0):
        raise ValueError(f"C0 must be positive semi-definite (min eigenvalue {evals[0]:.3e})")
    return 0.5 * (c0 + c0.T)


def _recursion_stream(model: TheoryModel, c0: np.ndarray, j_min: float, horizon: int):
    """Yield (n, c_vec) for n = 0..horizon, re-symmetrizing drifted iterates."""
    m = model.size
    forcing = model.step_size**2 * j_min * model.rkk_vec
    c = vec(c0)
    for n in range(horizon + 1):
        yield n, c
        if n == horizon:
            return
        c = model.g @ c + forcing
        c_mat = unvec(c, m)
        asym = np.abs(c_mat - c_mat.T).max()
        if asym > 1e-12:
            c = vec(0.5 * (c_mat + c_mat.T))
        trace = float(np.trace(unvec(c, m)))
        if not np.isfinite(trace) or trace > TRACE_DIVERGENCE_CAP:
            raise DivergedError(
                f"covariance trace exceeded {TRACE_DIVERGENCE_CAP:.0e} at step {n + 1}; "
                f"mean-square unstable at step size {model.step_size}",
                step=n + 1,
            )


def covariance_recursion(model: TheoryModel, c0: np.ndarray, j_min: float, horizon: int) -> np.ndarray:
    """Iterate the weight-error covariance recursion.

    Returns an (horizon + 1, M, M) array of symmetric iterates, row 0 being
    C0.  Raises DivergedError when the trace blows past 1e12, which signals
    mean-square instability at this step size.
    """
    m = model.size
    c0 = _check_c0(c0, m)
    out = np.empty((horizon + 1, m, m))
    for n, c in _recursion_stream(model, c0, j_min, horizon):
        out[n] = unvec(c, m)
    return out


def covariance_step_direct(c_mat, rkk, fourth_tensor, step_size, j_min):
    """One recursion step in M x M form (no M^2 x M^2 operator).

    fourth_tensor is the (M, M, M, M) view of the fourth-moment block with
    axes (i, j, l, p); the coupling term is t[i, j] = sum_lp k4[i,j,l,p] *
    c[l, p], the trace form of the fourth-moment contraction.
    """
    t = np.einsum("ijlp,lp->ij", fourth_tensor, c_mat)
    return (
        c_mat
        - step_size * (rkk @ c_mat + c_mat @ rkk)
        + step_size**2 * (t + j_min * rkk)
    )


def fourth_moment_tensor(fourth_moments: np.ndarray, m: int) -> np.ndarray:
    """Reshape the M^2 x M^2 fourth-moment block to (i, j, l, p) axes."""
    return fourth_moments.reshape(m, m, m, m, order="F")


def ms_stability(model: TheoryModel) -> tuple[bool, float]:
    """Mean-square stability verdict: spectral radius of the transition matrix.

    The matrix is symmetric, so the radius is the largest absolute
    eigenvalue; stable means strictly below one (a radius of exactly one,
    e.g. at zero step size, is reported as not stable).
    """
    evals = eigh(model.g, eigvals_only=True)
    radius = float(max(abs(evals[0]), abs(evals[-1])))
    return radius < 1.0, radius


def steady_state(model: TheoryModel, j_min: float) -> tuple[np.ndarray, float]:
    """Closed-form covariance fixed point and steady-state MSE.

    Solves (I - G) c = eta^2 j_min vec(R); requires mean-square stability.
    """
    stable, radius = ms_stability(model)
    if not stable:
        raise UnstableError(
            f"transition matrix spectral radius {radius:.6f} >= 1; no steady state"
        )
    m = model.size
    rhs = model.step_size**2 * j_min * model.rkk_vec
    c_inf = np.linalg.solve(np.eye(m * m) - model.g, rhs)
    c_mat = unvec(c_inf, m)
    c_mat = 0.5 * (c_mat + c_mat.T)
    mse_inf = j_min + float(np.trace(model.rkk @ c_mat))
    return c_mat, mse_inf


@dataclass(frozen=True)
class PredictedCurve:
    """Model-predicted MSE learning curve.

    mse[n] = min_mse + emse[n] for n = 0..horizon (inclusive, so the arrays
    have horizon + 1 entries).  steady_state_mse is the fixed-point MSE when
    the model is mean-square stable, NaN otherwise.
    """

    mse: np.ndarray
    emse: np.ndarray
    steady_state_mse: float
    horizon: int


def predict_curve(model: TheoryModel, c0: np.ndarray, horizon: int) -> PredictedCurve:
    """Predicted MSE trajectory from initial weight-error covariance c0.

    Streams the recursion without storing intermediate covariance matrices.
    """
    c0 = _check_c0(c0, model.size)
    j_min = model.optimal.min_mse
    r_vec = model.rkk_vec
    mse = np.empty(horizon + 1)
    for n, c in _recursion_stream(model, c0, j_min, horizon):
        mse[n] = j_min + float(r_vec @ c)
    stable, _ = ms_stability(model)
    ss = steady_state(model, j_min)[1] if stable else float("nan")
    return PredictedCurve(mse=mse, emse=mse - j_min, steady_state_mse=ss, horizon=horizon)


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def model_summary(model: TheoryModel) -> dict:
    """Key figures of the model: spectra, bounds, verdicts, floor, steady state."""
    evals = eigh(model.rkk, eigvals_only=True)
    stable, radius = ms_stability(model)
    eta = model.step_size
    bound = 2.0 / float(evals[-1])
    summary = {
        "dictionary_size": model.size,
        "step_size": eta,
        "lambda_max": float(evals[-1]),
        "lambda_min": float(evals[0]),
        "mean_stability_bound": bound,
        "mean_stable": eta < bound,
        "g_spectral_radius": radius,
        "ms_stable": stable,
        "j_min": model.optimal.min_mse,
        "j_min_bootstrap_se": model.optimal.bootstrap_se,
        "output_power": model.optimal.output_power,
    }
    if stable:
        summary["steady_state_mse"] = steady_state(model, model.optimal.min_mse)[1]
    return summary


def write_report(mapping: dict, path) -> None:
    """Plain-text report, one `key = value` line per entry."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {value}\n")


def curve_to_csv(curve: PredictedCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mse_theory", "emse_theory"])
        for n in range(curve.horizon + 1):
            writer.writerow([n, repr(curve.mse[n]), repr(curve.emse[n])])
