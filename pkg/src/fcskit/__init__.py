"""fcskit: exact expectation values of non-interacting multi-particle operators.

The package computes transition amplitudes <Phi1| U |Phi2> for operators that
act independently on every particle, in bosonic and fermionic product states.
Operators close to the identity are handled in polynomial time through their
low-rank difference; small systems are cross-checked against brute-force
Fock-space enumeration.  Counting statistics of mode occupations come from the
same machinery via diagonal counting kernels.
"""

from fcskit._backend import DEFAULT_BACKEND, HAVE_COMPILED, resolve_backend
from fcskit.errors import (
    DimensionError,
    FcskitError,
    GuardExceededError,
    NumericalError,
    ParityError,
    ParseError,
    UnsupportedStateError,
)
from fcskit.fcs import CountingSpec, chi, probabilities, sample_counts
from fcskit.fermion import expectation_lowrank
from fcskit.linalg import LowRankOperator, dense_to_lowrank, determinant
from fcskit.permanent import (
    build_aux_polynomial,
    permanent_lowrank,
    permanent_lowrank_log,
    permanent_ryser,
    permanent_submatrix,
)
from fcskit.states import (
    FactorState,
    ProductState,
    coherent_expectation,
    fermi_sea_expectation,
    make_fermi_sea,
    make_pair_superposition,
    make_single_boson,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BACKEND",
    "HAVE_COMPILED",
    "resolve_backend",
    "FcskitError",
    "DimensionError",
    "ParseError",
    "GuardExceededError",
    "UnsupportedStateError",
    "ParityError",
    "NumericalError",
    "LowRankOperator",
    "dense_to_lowrank",
    "determinant",
    "permanent_ryser",
    "permanent_submatrix",
    "permanent_lowrank",
    "permanent_lowrank_log",
    "build_aux_polynomial",
    "FactorState",
    "ProductState",
    "make_single_boson",
    "make_fermi_sea",
    "make_pair_superposition",
    "coherent_expectation",
    "fermi_sea_expectation",
    "expectation_lowrank",
    "CountingSpec",
    "chi",
    "probabilities",
    "sample_counts",
    "__version__",
]
