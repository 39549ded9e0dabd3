import math

import numpy as np
import pytest

from fcskit.errors import DimensionError, GuardExceededError, ParityError
from fcskit.fermion import (
    apply_local_creation,
    apply_local_annihilation,
    expectation_lowrank,
    local_word_expectation,
    one_body_density,
)
from fcskit.fock import apply_noninteracting
from fcskit.linalg import LowRankOperator
from fcskit.rand import generator, orthonormal_rows
from fcskit.states import (
    FactorState,
    ProductState,
    make_fermi_sea,
    make_pair_superposition,
    make_single_boson,
)


def random_op(seed, n, k):
    g = generator(seed)
    scale = 1.0 / np.sqrt(n)
    u = scale * (g.normal(size=(k, n)) + 1j * g.normal(size=(k, n)))
    v = scale * (g.normal(size=(k, n)) + 1j * g.normal(size=(k, n)))
    return LowRankOperator(n, u, v)


# ---------------------------------------------------------------------------
# Local operator algebra


def test_creation_is_nilpotent():
    amps = {(1, 0): 1.0 + 0.0j}
    once = apply_local_creation(amps, 2, [1.0, 0.0])
    assert once == {}


def test_creation_operators_anticommute():
    vac = {(0, 0): 1.0 + 0.0j}
    e0, e1 = [1.0, 0.0], [0.0, 1.0]
    ab = apply_local_creation(apply_local_creation(vac, 2, e1), 2, e0)
    ba = apply_local_creation(apply_local_creation(vac, 2, e0), 2, e1)
    assert ab[(1, 1)] == -ba[(1, 1)]


def test_annihilation_reverses_creation():
    vac = {(0, 0): 1.0 + 0.0j}
    psi = [0.6, 0.8j]
    up = apply_local_creation(vac, 2, psi)
    down = apply_local_annihilation(up, 2, np.conj(psi))
    assert down[(0, 0)] == pytest.approx(1.0)


def test_word_expectation_number_operator():
    factor = FactorState("fermion", 2, {(1, 0): 0.6, (0, 1): 0.8})
    # <n_0> through the word f+_0 f_0
    val = local_word_expectation(factor, [("c", [1, 0]), ("a", [1, 0])])
    assert val == pytest.approx(0.36)


def test_word_expectation_rejects_unknown_kind():
    factor = FactorState("fermion", 1, {(1,): 1.0})
    with pytest.raises(ValueError):
        local_word_expectation(factor, [("x", [1.0])])


def test_one_body_density_matches_word_expectation():
    r = 1.0 / math.sqrt(2.0)
    factor = FactorState("fermion", 3, {(1, 1, 0): r, (0, 1, 1): r})
    rho = one_body_density(factor)
    for m in range(3):
        for mm in range(3):
            em = [0.0] * 3
            emm = [0.0] * 3
            em[m] = 1.0
            emm[mm] = 1.0
            ref = local_word_expectation(factor, [("c", em), ("a", emm)])
            assert rho[m, mm] == pytest.approx(ref)
    # hermiticity and trace = particle number
    assert np.allclose(rho, rho.conj().T)
    assert np.trace(rho) == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# Full low-rank expectation against the Fock oracle


def oracle(state, op):
    phi = state.expand()
    dense = np.eye(state.total_modes) + op.to_dense()
    return phi.inner(apply_noninteracting(dense, phi))


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_expectation_sea_families(backend):
    worst = 0.0
    for seed, copies, n, filled in ((1, 2, 3, 2), (2, 3, 2, 1), (3, 1, 4, 2)):
        g = generator(seed)
        state = make_fermi_sea(orthonormal_rows(g, filled, n), copies)
        for k in (1, 2):
            op = random_op(seed + 10 * k, state.total_modes, k)
            fast = expectation_lowrank(state, op, backend=backend)
            worst = max(worst, abs(fast - oracle(state, op)))
    assert worst < 1e-12


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_expectation_pair_superposition(backend):
    worst = 0.0
    for copies in (1, 2, 3):
        state = make_pair_superposition(copies)
        for k in (1, 2):
            op = random_op(40 + copies + k, state.total_modes, k)
            fast = expectation_lowrank(state, op, backend=backend)
            worst = max(worst, abs(fast - oracle(state, op)))
    assert worst < 1e-12


# values pinned from the Fock oracle at the recorded seeds
@pytest.mark.parametrize(
    "seed,copies,n,filled,k,re,im",
    [
        (21, 2, 3, 2, 1, 1.0354505013153217, -0.15785169412117786),
        (22, 3, 2, 1, 2, 0.8025036138644643, -0.5933268081137872),
        (23, 2, 4, 2, 2, 0.7605940052880645, 0.4542822927330371),
    ],
)
def test_expectation_pinned_values(seed, copies, n, filled, k, re, im):
    g = generator(seed)
    if n == 4:
        state = make_pair_superposition(copies)
    else:
        state = make_fermi_sea(orthonormal_rows(g, filled, n), copies)
    op = random_op(seed, state.total_modes, k)
    # regenerate the operator exactly as pinned: the generator continues
    # after the orbital draw
    g2 = generator(seed)
    if n != 4:
        orthonormal_rows(g2, filled, n)
    scale = 1.0 / np.sqrt(state.total_modes)
    u = scale * (g2.normal(size=(k, state.total_modes))
                 + 1j * g2.normal(size=(k, state.total_modes)))
    v = scale * (g2.normal(size=(k, state.total_modes))
                 + 1j * g2.normal(size=(k, state.total_modes)))
    op = LowRankOperator(state.total_modes, u, v)
    val = expectation_lowrank(state, op)
    assert val == pytest.approx(complex(re, im), rel=1e-10)


def test_rank_zero_is_unity():
    state = make_pair_superposition(2)
    assert expectation_lowrank(state, LowRankOperator.zero(8)) == 1.0


def test_identity_plus_zero_columns():
    # operator vectors orthogonal to every occupied mode leave the state alone
    state = make_fermi_sea(np.eye(2)[:1], 2)
    u = np.zeros((1, 4))
    v = np.zeros((1, 4))
    u[0, 1] = 1.0  # creation on an empty mode
    v[0, 1] = 1.0
    val = expectation_lowrank(state, LowRankOperator(4, u, v))
    assert val == pytest.approx(1.0)


def test_rejects_boson_states():
    state = make_single_boson(3)
    with pytest.raises(DimensionError):
        expectation_lowrank(state, random_op(5, 3, 1))


def test_rejects_dimension_mismatch():
    state = make_pair_superposition(1)
    with pytest.raises(DimensionError):
        expectation_lowrank(state, random_op(5, 3, 1))


def test_rejects_indefinite_parity_factors():
    r = 1.0 / math.sqrt(2.0)
    mixed = FactorState("fermion", 2, {(0, 0): r, (1, 0): r})
    state = ProductState([mixed, mixed])
    with pytest.raises(ParityError):
        expectation_lowrank(state, random_op(6, 4, 1))


def test_assignment_budget_guard():
    state = make_fermi_sea(np.eye(2)[:1], 40)
    with pytest.raises(GuardExceededError):
        expectation_lowrank(state, random_op(7, 80, 4))
