import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcskit.errors import DimensionError, GuardExceededError
from fcskit.linalg import LowRankOperator
from fcskit.permanent import (
    LogComplex,
    build_aux_polynomial,
    permanent_lowrank,
    permanent_lowrank_log,
    permanent_ryser,
    permanent_submatrix,
)


def rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def random_complex(g, shape):
    return g.normal(size=shape) + 1j * g.normal(size=shape)


def naive_permanent(a):
    """Definition-level factorial sum, only for tiny matrices."""
    n = a.shape[0]
    total = 0.0 + 0.0j
    for p in itertools.permutations(range(n)):
        term = 1.0 + 0.0j
        for i in range(n):
            term *= a[i, p[i]]
        total += term
    return total


def random_op(seed, n, k, scale=1.0):
    g = rng(seed)
    u = scale / np.sqrt(n) * random_complex(g, (k, n))
    v = scale / np.sqrt(n) * random_complex(g, (k, n))
    return LowRankOperator(n, u, v)


# ---------------------------------------------------------------------------
# Ryser baseline


def test_ryser_trivial_cases():
    assert permanent_ryser(np.zeros((0, 0))) == 1.0
    assert permanent_ryser(np.eye(3)) == 1.0
    assert permanent_ryser(np.array([[1.0, 2.0], [3.0, 4.0]])) == 10.0


def test_ryser_matches_naive():
    for n in range(1, 7):
        a = random_complex(rng(40 + n), (n, n))
        ref = naive_permanent(a)
        assert permanent_ryser(a) == pytest.approx(ref, rel=1e-12)


# value pinned from the factorial-sum definition at seed 31
def test_ryser_pinned_value():
    a = random_complex(rng(31), (6, 6))
    val = permanent_ryser(a)
    assert val.real == pytest.approx(72.943381140912, rel=1e-12)
    assert val.imag == pytest.approx(-0.8825236918351145, rel=1e-11)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), seed=st.integers(0, 2**31))
def test_ryser_matches_naive_property(n, seed):
    a = random_complex(rng(seed), (n, n))
    assert permanent_ryser(a) == pytest.approx(naive_permanent(a), rel=1e-10)


def test_ryser_backends_agree():
    a = random_complex(rng(77), (8, 8))
    assert permanent_ryser(a, backend="python") == pytest.approx(
        permanent_ryser(a, backend="compiled"), rel=1e-13
    )


def test_ryser_dimension_guard():
    with pytest.raises(GuardExceededError):
        permanent_ryser(np.eye(31))


# ---------------------------------------------------------------------------
# Repeated-index submatrix permanents (bosonic transition elements)


def test_submatrix_identity_diagonal():
    u = np.eye(3, dtype=complex)
    assert permanent_submatrix(u, (2, 1, 0), (2, 1, 0)) == 2.0  # Per of [[1,1,0],[1,1,0],[0,0,1]]


def test_submatrix_equals_explicit_repetition():
    g = rng(8)
    u = random_complex(g, (3, 3))
    rows, cols = (2, 0, 1), (1, 1, 1)
    expanded = u[np.repeat(np.arange(3), rows)][:, np.repeat(np.arange(3), cols)]
    assert permanent_submatrix(u, rows, cols) == pytest.approx(
        naive_permanent(expanded), rel=1e-12
    )


def test_submatrix_rejects_unbalanced_counts():
    with pytest.raises(DimensionError):
        permanent_submatrix(np.eye(2), (1, 0), (1, 1))


# ---------------------------------------------------------------------------
# Low-rank permanent against the exponential oracle


def test_lowrank_all_ones_exact():
    op = LowRankOperator(2, np.ones((1, 2)), np.ones((1, 2)))
    assert permanent_lowrank(op) == 5.0


def test_lowrank_rank_zero_is_identity_permanent():
    assert permanent_lowrank(LowRankOperator.zero(6)) == 1.0


# values pinned from permanent_ryser(1 + V) at the recorded seeds
@pytest.mark.parametrize(
    "seed,n,k,re,im",
    [
        (11, 5, 1, 1.651495648769441, 0.37563283422299243),
        (12, 6, 2, -0.37509185182502874, 0.12535724509471638),
        (13, 7, 3, 0.8073020328472419, -5.830771286549261),
    ],
)
def test_lowrank_pinned_values(seed, n, k, re, im):
    val = permanent_lowrank(random_op(seed, n, k))
    assert val == pytest.approx(complex(re, im), rel=1e-10)


@pytest.mark.parametrize("mode", ["dense", "sliced"])
@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_lowrank_vs_ryser_sweep(mode, backend):
    worst = 0.0
    for n in range(2, 9):
        for k in (1, 2, 3):
            if mode == "dense" and k > 2:
                continue
            op = random_op(1000 + 10 * n + k, n, k)
            fast = permanent_lowrank(op, mode=mode, backend=backend)
            ref = permanent_ryser(np.eye(n) + op.to_dense())
            worst = max(worst, abs(fast - ref) / abs(ref))
    assert worst < 1e-10


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 7), k=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_lowrank_vs_ryser_property(n, k, seed):
    op = random_op(seed, n, k)
    fast = permanent_lowrank(op)
    ref = permanent_ryser(np.eye(n) + op.to_dense())
    assert fast == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_sliced_and_dense_tables_agree_exactly():
    for k in (1, 2):
        op = random_op(90 + k, 7, k)
        dense = build_aux_polynomial(op, mode="dense")
        sliced = build_aux_polynomial(op, mode="sliced")
        for d in range(8):
            assert np.array_equal(
                dense.diagonal_values(d), sliced.diagonal_values(d)
            )


def test_dense_table_never_writes_off_diagonal_degrees():
    # coefficients with unequal u/v degree totals must stay exact +0.0:
    # the kernels skip them rather than computing and discarding them
    op = random_op(17, 6, 2)
    table = build_aux_polynomial(op, mode="dense")
    base = table.base
    flat = table._flat.reshape(base**2, base**2)
    digit = np.arange(base**2)
    degs = digit // base + digit % base
    off = degs[:, None] != degs[None, :]
    assert np.all(flat[off] == 0)
    assert not np.any(np.signbit(flat[off].real))
    assert not np.any(np.signbit(flat[off].imag))


def test_lowrank_log_consistent_with_plain():
    op = random_op(23, 9, 2)
    plain = permanent_lowrank(op)
    lg = permanent_lowrank_log(op)
    assert lg.to_complex() == pytest.approx(plain, rel=1e-12)


# ---------------------------------------------------------------------------
# Scaled (large dynamic range) paths


def test_forced_rescale_matches_ryser():
    # scales chosen so coefficients leave the no-rescale window but the Ryser
    # reference still fits in float64; at this dynamic range Ryser itself
    # carries cancellation error, hence the looser tolerance
    for k, scale, seed in ((1, 1e5, 51), (2, 1e4, 52), (3, 3e3, 53)):
        op = random_op(seed, 24, k, scale=scale)
        table = build_aux_polynomial(op)
        assert table._scaled, "instance must actually exercise the rescale path"
        fast = table.contract()
        ref = permanent_ryser(np.eye(24) + op.to_dense())
        assert fast == pytest.approx(ref, rel=1e-7)


def test_backends_agree_at_large_dimension():
    op = random_op(61, 300, 1)
    a = permanent_lowrank_log(op, backend="python")
    b = permanent_lowrank_log(op, backend="compiled")
    assert a.log_abs == pytest.approx(b.log_abs, rel=1e-12)
    assert a.phase == pytest.approx(b.phase, rel=1e-11)


def _logc_add(x, y):
    (la, pa), (lb, pb) = x, y
    if la == -math.inf:
        return y
    if lb == -math.inf:
        return x
    if la < lb:
        (la, pa), (lb, pb) = (lb, pb), (la, pa)
    s = pa + pb * math.exp(lb - la)
    m = abs(s)
    if m == 0.0:
        return (-math.inf, 0.0 + 0.0j)
    return (la + math.log(m), s / m)


def _logc_scale(x, z):
    la, pa = x
    m = abs(z)
    if la == -math.inf or m == 0.0:
        return (-math.inf, 0.0 + 0.0j)
    return (la + math.log(m), pa * z / m)


def _rank1_reference_log(op):
    """Per(1 + u^T v) for rank 1 by the elementary-symmetric-function
    recurrence, carried entirely in (log-magnitude, phase) scalars.

    Shares no storage or kernel code with the production path, so it checks
    the per-degree rescaling machinery independently.
    """
    c = (op.u[0] * op.v[0]).tolist()
    n = len(c)
    e = [(0.0, 1.0 + 0.0j)] + [(-math.inf, 0.0 + 0.0j)] * n
    for cx in c:
        for j in range(n, 0, -1):
            e[j] = _logc_add(e[j], _logc_scale(e[j - 1], cx))
    total = (-math.inf, 0.0 + 0.0j)
    for j in range(n + 1):
        lj, pj = e[j]
        total = _logc_add(total, (lj + math.lgamma(j + 1), pj))
    return total


def test_scaled_rank1_against_independent_log_recurrence():
    op = random_op(71, 400, 1)
    got = permanent_lowrank_log(op)
    ref_log, ref_phase = _rank1_reference_log(op)
    assert got.log_abs == pytest.approx(ref_log, rel=1e-12)
    assert got.phase == pytest.approx(ref_phase, abs=1e-10)


def test_logcomplex_edges():
    assert LogComplex(-math.inf, 0.0 + 0.0j).to_complex() == 0.0
    big = LogComplex(1e4, 1.0 + 0.0j).to_complex()
    assert math.isinf(big.real)


# ---------------------------------------------------------------------------
# Guards


def test_dense_mode_cap():
    with pytest.raises(GuardExceededError):
        build_aux_polynomial(random_op(1, 60, 2), mode="dense")


def test_sliced_mode_cap():
    with pytest.raises(GuardExceededError):
        build_aux_polynomial(random_op(1, 60, 3), mode="sliced")
