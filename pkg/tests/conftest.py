import numpy as np
import pytest

from jcprobe import (
    CavityStateSpec,
    HamiltonianParams,
    SimulationConfig,
    analytic_derivatives,
    build_jc_hamiltonian,
    run_simulate,
)

# Reference setup used throughout: resonant run with unit parameters and a
# coherent cavity state of mean photon number one. D=50 keeps every suite
# fast while the coherent tail mass stays far below the 1e-10 guard.
S1_DIM = 50
S1_CONFIG = SimulationConfig(
    kind="jc",
    a=1.0,
    omega=1.0,
    g=1.0,
    dim=S1_DIM,
    cavity=CavityStateSpec.coherent(1.0),
    delta=0.01,
    steps=4,
)

# Exact t=0 derivative tensors for the reference setup, hand-derived from
# the recovery relations with <b+b+> = 2, <(b+b+)^2> = 5, <(i(b-b+))^2> = 1
# and cross-checked against the commutator oracle and finite differences.
S1_D1 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, -2.0], [0.0, 2.0, 0.0]])
S1_D2 = np.array([[-2.0, 0.0, 4.0], [0.0, -6.0, 0.0], [-2.0, -2.0, -8.0]])


@pytest.fixture(scope="session")
def s1_record():
    return run_simulate(S1_CONFIG)


@pytest.fixture(scope="session")
def s1_hamiltonian():
    return build_jc_hamiltonian(
        HamiltonianParams(a=1.0, omega=1.0, g=1.0, dim_cavity=S1_DIM)
    )


@pytest.fixture(scope="session")
def s1_oracle(s1_hamiltonian):
    return analytic_derivatives(s1_hamiltonian, CavityStateSpec.coherent(1.0))
