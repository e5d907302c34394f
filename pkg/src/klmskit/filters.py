"""Online Gaussian KLMS adaptive filter against a fixed dictionary.

Prediction uses the current weights before the update (a-priori error):

    prediction(n) = k(n)' alpha(n)
    error(n)      = y(n) - prediction(n)
    alpha(n+1)    = alpha(n) + eta * error(n) * k(n)

where k(n) is the input kernelized against the dictionary centers.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .dictionary import Dictionary
from .errors import DimensionMismatchError, NonFiniteError
from .kernels import GaussianKernel

WEIGHT_NORM_CAP = 1e8


def kernelize(x, dictionary: Dictionary, kernel: GaussianKernel) -> np.ndarray:
    """Kernel values of one input against every dictionary center."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != dictionary.dimension:
        raise DimensionMismatchError(
            f"input has dimension {x.shape[0]}, dictionary expects {dictionary.dimension}"
        )
    return kernel.column(x, dictionary.centers)


@dataclass
class StepRecord:
    """One filter iteration: kernelized input, prediction, error, target."""

    kernelized_input: np.ndarray
    prediction: float
    error: float
    desired: float


@dataclass
class FilterState:
    """Weights and step size of one online KLMS filter instance.

    Weights default to zero, the standard LMS initial condition.  Once the
    divergence flag is set the state is frozen: further steps raise.
    """

    dictionary: Dictionary
    kernel: GaussianKernel
    step_size: float
    weights: np.ndarray | None = None
    iteration: int = 0
    diverged: bool = False

    def __post_init__(self):
        # zero is allowed so the no-op update edge case stays testable
        if self.step_size < 0:
            raise ValueError(f"step_size must be nonnegative, got {self.step_size}")
        if self.weights is None:
            self.weights = np.zeros(self.dictionary.size)
        else:
            self.weights = np.asarray(self.weights, dtype=float).copy()
            if self.weights.shape != (self.dictionary.size,):
                raise DimensionMismatchError(
                    f"weights must have length {self.dictionary.size}, got {self.weights.shape}"
                )

    def step(self, x, y: float) -> StepRecord:
        """Predict, compute the error, and update the weights in place."""
        if self.diverged:
            raise NonFiniteError("filter has diverged; state is frozen")
        k = kernelize(x, self.dictionary, self.kernel)
        prediction = float(k @ self.weights)
        error = float(y) - prediction
        new_weights = self.weights + self.step_size * error * k
        if not np.isfinite(new_weights).all() or np.linalg.norm(new_weights) > WEIGHT_NORM_CAP:
            self.diverged = True
            raise NonFiniteError(
                f"weights diverged at iteration {self.iteration} "
                f"(step size {self.step_size} too large for this dictionary)"
            )
        self.weights = new_weights
        self.iteration += 1
        return StepRecord(kernelized_input=k, prediction=prediction, error=error, desired=float(y))


@dataclass
class RunResult:
    """Step records of one filter run, with early-stop divergence bookkeeping."""

    records: list[StepRecord] = field(default_factory=list)
    diverged: bool = False
    failure_index: int | None = None

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.records])

    @property
    def predictions(self) -> np.ndarray:
        return np.array([r.prediction for r in self.records])


def run(state: FilterState, stream) -> RunResult:
    """Drive the filter over a sequence of (x, y) pairs.

    Stops early if a step diverges; the partial records, the divergence flag
    and the failing index are all preserved in the result.
    """
    result = RunResult()
    for n, (x, y) in enumerate(stream):
        try:
            result.records.append(state.step(x, y))
        except NonFiniteError:
            result.diverged = True
            result.failure_index = n
            break
    return result


def records_to_csv(result: RunResult, path) -> None:
    """Stream step records to CSV with columns n, y, prediction, error."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "y", "prediction", "error"])
        for n, rec in enumerate(result.records):
            writer.writerow([n, repr(rec.desired), repr(rec.prediction), repr(rec.error)])
