"""Small builders shared by the theory-side tests."""

import numpy as np

import klmskit as kk
from klmskit.theory import OptimalSolution, TheoryModel, covariance_transition


def model_from_moments(dictionary, kernel, input_model, step_size, j_min=0.01,
                       alpha=None):
    """TheoryModel with real closed-form moments and a hand-set optimum."""
    rkk = kk.kernel_correlation_matrix(dictionary, kernel, input_model)
    k4 = kk.fourth_moment_matrix(dictionary, kernel, input_model)
    m = dictionary.size
    if alpha is None:
        alpha = np.zeros(m)
    optimal = OptimalSolution(
        cross_correlation=rkk @ alpha,
        optimal_weights=alpha,
        min_mse=j_min,
        output_power=j_min + float(alpha @ rkk @ alpha),
        bootstrap_se=0.0,
    )
    eye_m = np.eye(m)
    return TheoryModel(
        rkk=rkk,
        optimal=optimal,
        step_size=step_size,
        g1=np.kron(eye_m, rkk),
        g2=np.kron(rkk, eye_m),
        g3=k4,
        g=covariance_transition(rkk, k4, step_size),
    )


def scalar_model(r, k, step_size, j_min=0.0):
    """M = 1 model with prescribed second and fourth moments."""
    rkk = np.array([[r]])
    k4 = np.array([[k]])
    optimal = OptimalSolution(
        cross_correlation=np.zeros(1),
        optimal_weights=np.zeros(1),
        min_mse=j_min,
        output_power=j_min,
        bootstrap_se=0.0,
    )
    return TheoryModel(
        rkk=rkk,
        optimal=optimal,
        step_size=step_size,
        g1=rkk.copy(),
        g2=rkk.copy(),
        g3=k4,
        g=covariance_transition(rkk, k4, step_size),
    )
