import numpy as np
import pytest

import klmskit as kk


@pytest.fixture(scope="session")
def exp1_dictionary():
    return kk.experiment1_dictionary()


@pytest.fixture(scope="session")
def exp1_setup(exp1_dictionary):
    """(dictionary, kernel, input_model) for the Wiener benchmark."""
    cfg = kk.EXPERIMENT_1
    return exp1_dictionary, cfg.kernel(), cfg.input_model()


@pytest.fixture(scope="session")
def exp2_dictionary():
    """(mu0, dictionary) from the seeded coherence sweep targeting 37 centers."""
    return kk.experiment2_dictionary()


@pytest.fixture(scope="session")
def exp2_setup(exp2_dictionary):
    cfg = kk.EXPERIMENT_2
    return exp2_dictionary[1], cfg.kernel(), cfg.input_model()


def random_spd(rng, dim, scale=1.0):
    a = rng.standard_normal((dim, dim))
    return scale * (a @ a.T + dim * np.eye(dim))
