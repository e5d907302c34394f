"""Nonlinear system-identification benchmarks and theory-vs-simulation comparison.

Two plants are provided: a polynomial Wiener system and a saturating
fluid-flow system with output feedback.  Both are driven by an AR(1) input
sequence; the filter sees the time embedding x(n) = [x(n), x(n-1)] and the
noisy plant output.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .dictionary import Dictionary, coherence_threshold_for_size
from .errors import DivergedError, HorizonMismatchError
from .filters import FilterState, run
from .kernels import GaussianKernel
from .moments import InputModel
from .theory import (
    OptimalSolution,
    PredictedCurve,
    TheoryModel,
    build_theory_model,
    estimate_optimal,
    predict_curve,
)


@dataclass(frozen=True)
class Ar1Source:
    """AR(1) generator x(n) = rho x(n-1) + sigma_x sqrt(1-rho^2) w(n).

    The driving noise w is i.i.d. standard normal, so the stationary
    standard deviation of x is sigma_x exactly.
    """

    rho: float
    sigma_x: float
    seed: int = 0

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.sigma_x <= 0:
            raise ValueError(f"sigma_x must be positive, got {self.sigma_x}")

    def sequence(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        """n samples started from the stationary distribution."""
        if rng is None:
            rng = np.random.default_rng(self.seed)
        x0 = self.sigma_x * rng.standard_normal()
        if n == 1:
            return np.array([x0])
        w = rng.standard_normal(n - 1)
        c = self.sigma_x * np.sqrt(1.0 - self.rho**2)
        rest, _ = lfilter([c], [1.0, -self.rho], w, zi=np.array([self.rho * x0]))
        return np.concatenate(([x0], rest))


class WienerPolySystem:
    """Linear FIR stage u(n) = 0.5 x(n) - 0.3 x(n-1) into a cubic polynomial."""

    kind = "wiener_poly"

    def __init__(self, noise_std: float):
        if noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        self.noise_std = noise_std

    def response(self, x_pairs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        u = 0.5 * x_pairs[:, 0] - 0.3 * x_pairs[:, 1]
        y = u - 0.5 * u**2 + 0.1 * u**3
        if self.noise_std > 0:
            y = y + self.noise_std * rng.standard_normal(len(y))
        return y


class FluidFlowSystem:
    """Saturating plant with output feedback.

    u(n) = 0.1044 x(n) + 0.0883 x(n-1) + 1.4138 y(n-1) - 0.6065 y(n-2)
    y(n) = 0.3163 u(n) / sqrt(0.10 + 0.90 u(n)^2) + v(n)

    The feedback uses the noisy output; the run warms up from
    y(-1) = y(-2) = 0, a transient that decays within tens of samples.
    """

    kind = "fluid_flow"

    def __init__(self, noise_std: float):
        if noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        self.noise_std = noise_std

    def response(self, x_pairs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = len(x_pairs)
        v = self.noise_std * rng.standard_normal(n) if self.noise_std > 0 else np.zeros(n)
        y = np.empty(n)
        y1 = y2 = 0.0
        x0 = x_pairs[:, 0]
        x1 = x_pairs[:, 1]
        for k in range(n):
            u = 0.1044 * x0[k] + 0.0883 * x1[k] + 1.4138 * y1 - 0.6065 * y2
            yk = 0.3163 * u / np.sqrt(0.10 + 0.90 * u * u) + v[k]
            y[k] = yk
            y2 = y1
            y1 = yk
        return y


def make_system(kind: str, noise_std: float):
    if kind == "wiener_poly":
        return WienerPolySystem(noise_std)
    if kind == "fluid_flow":
        return FluidFlowSystem(noise_std)
    raise ValueError(f"unknown system kind {kind!r}")


def generate(source: Ar1Source, system, n: int, rng: np.random.Generator | None = None):
    """n pairs (x(k) = [x(k), x(k-1)], y(k)) from the plant.

    The embedding needs one pre-sample, so n + 1 AR values are drawn with a
    stationary start; the observation noise is drawn afterwards from the
    same generator, which keeps runs reproducible given the seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if rng is None:
        rng = np.random.default_rng(source.seed)
    x = source.sequence(n + 1, rng)
    x_pairs = np.stack([x[1:], x[:-1]], axis=1)
    y = system.response(x_pairs, rng)
    return x_pairs, y


# ---------------------------------------------------------------------------
# Experiment configurations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    rho: float
    sigma_x: float
    noise_std: float
    bandwidth: float
    step_size: float
    horizon: int = 5000
    runs: int = 100

    def input_model(self) -> InputModel:
        return InputModel.ar1(self.rho, self.sigma_x, dimension=2)

    def kernel(self) -> GaussianKernel:
        return GaussianKernel(self.bandwidth)

    def system(self):
        return make_system(self.kind, self.noise_std)

    def source(self, seed: int = 0) -> Ar1Source:
        return Ar1Source(self.rho, self.sigma_x, seed)

    def sampler(self):
        """Stationary (x, y) stream for moment estimation: (n, rng) -> (X, y)."""
        system = self.system()
        source = Ar1Source(self.rho, self.sigma_x)

        def draw(n, rng):
            return generate(source, system, n, rng)

        return draw


EXPERIMENT_1 = ExperimentConfig(
    kind="wiener_poly", rho=0.5, sigma_x=0.5, noise_std=0.05,
    bandwidth=0.25, step_size=0.05,
)
EXPERIMENT_2 = ExperimentConfig(
    kind="fluid_flow", rho=0.5, sigma_x=0.25, noise_std=0.05,
    bandwidth=0.15, step_size=0.05,
)

EXPERIMENT_2_DICT_SEED = 20260810
EXPERIMENT_2_DICT_STREAM = 4000
EXPERIMENT_2_DICT_SIZE = 37


def experiment1_dictionary() -> Dictionary:
    """5 x 5 uniform grid on [-1, 1]^2 (25 centers, grid step 0.5)."""
    return Dictionary.from_grid((-1.0, -1.0), (1.0, 1.0), (5, 5))


def experiment2_dictionary(
    seed: int = EXPERIMENT_2_DICT_SEED,
    stream_length: int = EXPERIMENT_2_DICT_STREAM,
    target_size: int = EXPERIMENT_2_DICT_SIZE,
) -> tuple[float, Dictionary]:
    """Coherence-selected dictionary for the fluid-flow benchmark.

    The admission threshold is not a free parameter here: it is swept on a
    seeded input stream until the dictionary holds exactly `target_size`
    centers, and the chosen threshold is returned alongside the result.
    """
    source = Ar1Source(EXPERIMENT_2.rho, EXPERIMENT_2.sigma_x, seed)
    x = source.sequence(stream_length + 1)
    stream = np.stack([x[1:], x[:-1]], axis=1)
    kernel = EXPERIMENT_2.kernel()
    return coherence_threshold_for_size(stream, kernel, target_size)


# ---------------------------------------------------------------------------
# Monte Carlo simulation
# ---------------------------------------------------------------------------

@dataclass
class LearningCurve:
    """Per-iteration squared error averaged over Monte Carlo runs."""

    mse_empirical: np.ndarray
    runs: int
    horizon: int
    mse_theory: np.ndarray | None = None


def monte_carlo(
    config: ExperimentConfig,
    dictionary: Dictionary,
    master_seed: int,
    runs: int | None = None,
    system_override=None,
    initial_weights: np.ndarray | None = None,
) -> LearningCurve:
    """Average e^2(n) over independent filter runs.

    Every run draws its own seed from the master seed, builds a fresh
    zero-initialized filter (unless initial weights are given) and processes
    an independent realization of the plant.  Runs are reduced in run-index
    order, so the curve is reproducible regardless of scheduling.
    """
    runs = config.runs if runs is None else runs
    if runs < 1:
        raise ValueError("runs must be >= 1")
    kernel = config.kernel()
    system = system_override if system_override is not None else config.system()
    source = Ar1Source(config.rho, config.sigma_x)
    seeds = np.random.SeedSequence(master_seed).spawn(runs)
    total = np.zeros(config.horizon)
    for index, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        x_pairs, y = generate(source, system, config.horizon, rng)
        state = FilterState(dictionary, kernel, config.step_size, weights=initial_weights)
        result = run(state, zip(x_pairs, y))
        if result.diverged:
            raise DivergedError(
                f"filter diverged in run {index} at iteration {result.failure_index} "
                f"(step size {config.step_size})",
                step=result.failure_index,
            )
        total += result.errors**2
    return LearningCurve(mse_empirical=total / runs, runs=runs, horizon=config.horizon)


def theory_pipeline(
    config: ExperimentConfig,
    dictionary: Dictionary,
    n_samples: int = 1_000_000,
    seed: int = 0,
) -> tuple[TheoryModel, PredictedCurve, OptimalSolution]:
    """Full analytical pipeline for one experiment configuration.

    Estimates the optimal solution, builds the transition operator, and
    predicts the MSE curve from the zero-initialized filter's deterministic
    initial weight-error covariance (outer product of the optimal weights).
    """
    optimal = estimate_optimal(
        dictionary,
        config.kernel(),
        config.input_model(),
        config.sampler(),
        n_samples=n_samples,
        rng=seed,
    )
    model = build_theory_model(
        dictionary, config.kernel(), config.input_model(), optimal, config.step_size
    )
    c0 = np.outer(optimal.optimal_weights, optimal.optimal_weights)
    curve = predict_curve(model, c0, config.horizon - 1)
    return model, curve, optimal


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average; shorter prefix windows are averaged as-is."""
    values = np.asarray(values, dtype=float)
    csum = np.cumsum(np.insert(values, 0, 0.0))
    n = len(values)
    idx = np.arange(n)
    start = np.maximum(idx - window + 1, 0)
    return (csum[idx + 1] - csum[start]) / (idx + 1 - start)


@dataclass(frozen=True)
class Tolerances:
    steady_state_rel: float = 0.05
    transient_rel: float = 0.10
    checkpoints: tuple = (200, 500, 1000, 2000)
    smoothing_window: int = 100
    tail_fraction: float = 0.10


@dataclass
class ComparisonReport:
    """Agreement metrics between an empirical curve and the model prediction."""

    steady_state_empirical: float
    steady_state_theory: float
    steady_state_rel_error: float
    curve_tail_theory: float
    curve_tail_rel_error: float
    checkpoint_rel_errors: dict
    max_transient_rel_error: float
    tolerances: Tolerances
    passed: bool

    def to_text(self) -> str:
        lines = [
            f"steady_state_empirical = {self.steady_state_empirical!r}",
            f"steady_state_theory = {self.steady_state_theory!r}",
            f"steady_state_rel_error = {self.steady_state_rel_error!r}",
            f"curve_tail_theory = {self.curve_tail_theory!r}",
            f"curve_tail_rel_error = {self.curve_tail_rel_error!r}",
        ]
        for cp, err in self.checkpoint_rel_errors.items():
            lines.append(f"checkpoint_{cp}_rel_error = {err!r}")
        lines.append(f"max_transient_rel_error = {self.max_transient_rel_error!r}")
        lines.append(f"tolerance_steady_state_rel = {self.tolerances.steady_state_rel}")
        lines.append(f"tolerance_transient_rel = {self.tolerances.transient_rel}")
        lines.append(f"passed = {self.passed}")
        return "\n".join(lines)


def compare(curve: LearningCurve, predicted: PredictedCurve, tolerances: Tolerances = Tolerances()) -> ComparisonReport:
    """Score the empirical curve against the prediction.

    The steady-state criterion compares the mean of the last tail fraction
    of the smoothed empirical curve against the fixed-point MSE; transient
    agreement is checked pointwise on smoothed curves at the configured
    checkpoints.  The smoothed theory-curve tail is also reported, since a
    slowly converging configuration can sit measurably above its fixed point
    at the end of the horizon.
    """
    emp = np.asarray(curve.mse_empirical, dtype=float)
    theo = np.asarray(predicted.mse, dtype=float)
    if len(emp) != len(theo):
        raise HorizonMismatchError(
            f"empirical horizon {len(emp)} != predicted horizon {len(theo)}"
        )
    window = tolerances.smoothing_window
    emp_s = moving_average(emp, window)
    theo_s = moving_average(theo, window)
    tail = slice(int(len(emp) * (1.0 - tolerances.tail_fraction)), len(emp))
    emp_ss = float(emp_s[tail].mean())
    theo_ss = float(predicted.steady_state_mse)
    ss_rel = abs(emp_ss - theo_ss) / abs(theo_ss) if np.isfinite(theo_ss) else float("inf")
    tail_theory = float(theo_s[tail].mean())
    tail_rel = abs(emp_ss - tail_theory) / abs(tail_theory)
    cps = {}
    for cp in tolerances.checkpoints:
        if not 0 <= cp < len(emp):
            raise HorizonMismatchError(f"checkpoint {cp} outside horizon {len(emp)}")
        cps[int(cp)] = float(abs(emp_s[cp] - theo_s[cp]) / theo_s[cp])
    body = slice(window, len(emp))
    max_trans = float(np.max(np.abs(emp_s[body] - theo_s[body]) / theo_s[body]))
    passed = ss_rel <= tolerances.steady_state_rel and all(
        v <= tolerances.transient_rel for v in cps.values()
    )
    return ComparisonReport(
        steady_state_empirical=emp_ss,
        steady_state_theory=theo_ss,
        steady_state_rel_error=float(ss_rel),
        curve_tail_theory=tail_theory,
        curve_tail_rel_error=float(tail_rel),
        checkpoint_rel_errors=cps,
        max_transient_rel_error=max_trans,
        tolerances=tolerances,
        passed=passed,
    )


def curves_to_csv(curve: LearningCurve, predicted: PredictedCurve | None, path) -> None:
    """Combined CSV with columns n, mse_empirical, mse_theory."""
    theo = predicted.mse if predicted is not None else None
    if theo is not None and len(theo) != len(curve.mse_empirical):
        raise HorizonMismatchError("curves have different horizons")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mse_empirical", "mse_theory"])
        for n, value in enumerate(curve.mse_empirical):
            row = [n, repr(float(value))]
            row.append(repr(float(theo[n])) if theo is not None else "")
            writer.writerow(row)


def curves_from_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read back a combined curve CSV; returns (empirical, theory-or-None)."""
    emp, theo = [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["n", "mse_empirical"]:
            raise ValueError(f"{path} is not a learning-curve CSV")
        for row in reader:
            emp.append(float(row[1]))
            theo.append(float(row[2]) if len(row) > 2 and row[2] != "" else np.nan)
    theo_arr = np.asarray(theo)
    return np.asarray(emp), (None if np.isnan(theo_arr).all() else theo_arr)
