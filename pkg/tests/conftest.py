import numpy as np
import pytest

import afmcavity as ac


@pytest.fixture(scope="session")
def spins():
    return ac.SpinSystemParams()


@pytest.fixture(scope="session")
def cavity():
    return ac.CavityParams()


@pytest.fixture(scope="session")
def coupling():
    return ac.CouplingParams(big_g=1.72)


@pytest.fixture(scope="session")
def loss(cavity):
    return ac.LossParams.from_cavity(cavity, magnon_linewidth=0.035)


@pytest.fixture(scope="session")
def default_map(spins, cavity, coupling, loss):
    """Reference sweep: 0-1.1 T in 5 mT steps, 8-15 GHz in 5 MHz steps."""
    field_axis = ac.GridSpec(start=0.0, stop=1.1, step=0.005).samples()
    freq_axis = ac.GridSpec(start=8.0, stop=15.0, step=0.005).samples()
    return ac.synthesize_map(field_axis, freq_axis, spins, cavity, coupling, loss)


@pytest.fixture(scope="session")
def default_peaks(default_map):
    return ac.extract_peaks(default_map, min_prominence=0.2)


def map_field_step(tmap) -> float:
    return float(np.min(np.diff(tmap.field_axis)))


def map_freq_step(tmap) -> float:
    return float(np.min(np.diff(tmap.freq_axis)))
