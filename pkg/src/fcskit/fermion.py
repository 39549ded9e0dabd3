"""Polynomial-time fermionic expectations of low-rank operator differences.

For a fermionic one-particle matrix 1 + V with V of rank k, the
second-quantized operator expands into creation/annihilation words over
subsets of the rank index:

    U = sum_{S subset of {1..k}}  u+_{s1} ... u+_{sr} v_{sr} ... v_{s1}

with the creations in ascending subset order and the annihilations reversed.
Each word is summed over all N^{2r} ways of assigning its operators to the
product-state factors; assignments whose per-factor sub-words cannot conserve
that factor's particle number are skipped, and surviving local expectations
are memoized.  The degree-1 words dominate the cost and run through a
quadratic kernel over cached one-body density matrices.

Factors must have definite particle-number parity; only then do the
odd-length local words all vanish, which is what keeps the reordering signs
of the surviving assignments tractable.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from fcskit import _backend
from fcskit.errors import DimensionError, GuardExceededError, ParityError
from fcskit.linalg import LowRankOperator
from fcskit.states import FactorState, ProductState

#: Cap on the total number of operator-placement assignments enumerated.
MAX_ASSIGNMENTS = 5_000_000


def _jw_sign(cfg, mode: int) -> int:
    """(-1)^(occupied modes below ``mode``), the string-ordering sign."""
    s = 0
    for p in range(mode):
        s += cfg[p]
    return -1 if s & 1 else 1


def apply_local_creation(amps: dict, modes: int, coeffs) -> dict:
    """sum_m coeffs[m] f+_m applied to a local occupation-basis vector."""
    out: dict[tuple[int, ...], complex] = {}
    for cfg, amp in amps.items():
        for m in range(modes):
            c = coeffs[m]
            if c == 0 or cfg[m]:
                continue
            new = cfg[:m] + (1,) + cfg[m + 1 :]
            val = _jw_sign(cfg, m) * c * amp
            out[new] = out.get(new, 0.0 + 0.0j) + val
    return out


def apply_local_annihilation(amps: dict, modes: int, coeffs) -> dict:
    """sum_m coeffs[m] f_m applied to a local occupation-basis vector."""
    out: dict[tuple[int, ...], complex] = {}
    for cfg, amp in amps.items():
        for m in range(modes):
            c = coeffs[m]
            if c == 0 or not cfg[m]:
                continue
            new = cfg[:m] + (0,) + cfg[m + 1 :]
            val = _jw_sign(cfg, m) * c * amp
            out[new] = out.get(new, 0.0 + 0.0j) + val
    return out


def local_word_expectation(factor: FactorState, ops) -> complex:
    """<factor| op_1 op_2 ... op_L |factor> for a word of local operators.

    ``ops`` lists (kind, coeffs) pairs left to right, kind 'c' for creation
    and 'a' for annihilation; coefficients are local-mode amplitude vectors.
    """
    state = factor.amps
    for kind, coeffs in reversed(list(ops)):
        if kind == "c":
            state = apply_local_creation(state, factor.modes, coeffs)
        elif kind == "a":
            state = apply_local_annihilation(state, factor.modes, coeffs)
        else:
            raise ValueError(f"unknown operator kind {kind!r}")
        if not state:
            return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for cfg, amp in state.items():
        ref = factor.amps.get(cfg)
        if ref is not None:
            total += ref.conjugate() * amp
    return total


def one_body_density(factor: FactorState) -> np.ndarray:
    """rho[m, m'] = <factor| f+_m f_m' |factor> on the local modes."""
    n = factor.modes
    rho = np.zeros((n, n), dtype=np.complex128)
    for cfg, amp in factor.amps.items():
        for mm in range(n):
            if not cfg[mm]:
                continue
            s1 = _jw_sign(cfg, mm)
            mid = cfg[:mm] + (0,) + cfg[mm + 1 :]
            for m in range(n):
                if mid[m]:
                    continue
                s2 = _jw_sign(mid, m)
                new = mid[:m] + (1,) + mid[m + 1 :]
                ref = factor.amps.get(new)
                if ref is not None:
                    rho[m, mm] += ref.conjugate() * (s1 * s2) * amp
    return rho


def crossing_sign(assignment, parities, total_parity: int) -> int:
    """Sign from reordering word operators to sit next to their factors.

    ``assignment`` maps operator positions to factor indices.  The sign is
    (-1)^(inversions of the assignment) times a parity correction
    (-1)^(sum_i g_i (P - pi_i)) over factors receiving an odd operator count
    g_i, with pi_i the factor parities and P their total.
    """
    inv = 0
    a = list(assignment)
    for p in range(len(a)):
        for q in range(p + 1, len(a)):
            if a[p] > a[q]:
                inv += 1
    odd_counts: dict[int, int] = {}
    for i in a:
        odd_counts[i] = odd_counts.get(i, 0) ^ 1
    eps = 0
    for i, g in odd_counts.items():
        if g:
            eps += total_parity - parities[i]
    return -1 if (inv + eps) & 1 else 1


def _pack(state: ProductState):
    """Cache per-factor densities, parities and packing info on the state."""
    if state._pack_cache is None:
        factors = state.factors
        n_fac = len(factors)
        nmax = max(f.modes for f in factors)
        rho = np.zeros((n_fac, nmax, nmax), dtype=np.complex128)
        parity = np.zeros(n_fac, dtype=np.uint8)
        transfers: list[frozenset] = []
        shared: dict[int, tuple] = {}
        for i, f in enumerate(factors):
            key = id(f)
            if key not in shared:
                totals = f.totals()
                pars = {t & 1 for t in totals}
                if len(pars) != 1:
                    raise ParityError(
                        "low-rank fermionic contraction needs factors of "
                        "definite particle-number parity"
                    )
                shared[key] = (
                    one_body_density(f),
                    pars.pop(),
                    frozenset(t - tp for t in totals for tp in totals),
                )
            r, p, tr = shared[key]
            rho[i, : f.modes, : f.modes] = r
            parity[i] = p
            transfers.append(tr)
        homog = all(f.modes == nmax for f in factors)
        state._pack_cache = (rho, parity, transfers, nmax, homog)
    return state._pack_cache


def _factor_blocks(state: ProductState, vec: np.ndarray, nmax: int,
                   homog: bool) -> np.ndarray:
    """View or pad a global-mode vector as an (n_factors, nmax) block array."""
    if homog:
        return vec.reshape(state.n_factors, nmax)
    out = np.zeros((state.n_factors, nmax), dtype=np.complex128)
    for i, (off, f) in enumerate(zip(state.offsets, state.factors)):
        out[i, : f.modes] = vec[off : off + f.modes]
    return out


def expectation_lowrank(state: ProductState, op: LowRankOperator,
                        backend: str | None = None) -> complex:
    """<Phi| U |Phi> for the fermionic operator with matrix 1 + (rank-k V).

    O(N^2) per degree-1 word; higher subsets enumerate N^(2r) assignments
    with memoized local expectations and are guarded by MAX_ASSIGNMENTS.
    """
    if state.flavor != "fermion":
        raise DimensionError("this contraction handles fermionic states")
    if op.dim != state.total_modes:
        raise DimensionError(
            f"operator dimension {op.dim} does not match {state.total_modes} modes"
        )
    k = op.rank
    n_fac = state.n_factors
    rho, parity, transfers, nmax, homog = _pack(state)
    total_parity = int(parity.sum()) & 1
    kern = _backend.kernels(backend or "auto")
    # empty word: the product of factor norms
    total = 1.0 + 0.0j
    zeros = np.zeros(n_fac, dtype=np.complex128)
    for s in range(k):
        ub = _factor_blocks(state, op.u[s], nmax, homog)
        vb = _factor_blocks(state, op.v[s], nmax, homog)
        # single-operator expectations vanish for definite-parity factors,
        # which is the parity precheck for all cross-factor assignments
        total += kern.fermion_rank1_word(ub, vb, rho, zeros, zeros, parity)
    if k >= 2:
        budget = sum(
            n_fac ** (2 * r) * math.comb(k, r) for r in range(2, k + 1)
        )
        if budget > MAX_ASSIGNMENTS:
            raise GuardExceededError(
                f"{budget} operator assignments exceed the cap of "
                f"{MAX_ASSIGNMENTS}"
            )
        memo: dict = {}
        for r in range(2, k + 1):
            for subset in itertools.combinations(range(k), r):
                total += _subset_word(
                    state, op, subset, memo, transfers, parity, total_parity
                )
    return total


def _subset_word(state, op, subset, memo, transfers, parity, total_parity):
    """Sum all factor assignments of one creation/annihilation word."""
    r = len(subset)
    ops = [("c", s) for s in subset] + [("a", s) for s in reversed(subset)]
    n_fac = state.n_factors
    total = 0.0 + 0.0j
    for assign in itertools.product(range(n_fac), repeat=2 * r):
        words: dict[int, list] = {}
        for pos, i in enumerate(assign):
            words.setdefault(i, []).append(ops[pos])
        ok = True
        for i, word in words.items():
            delta = sum(1 if kind == "c" else -1 for kind, _ in word)
            if delta not in transfers[i]:
                ok = False
                break
        if not ok:
            continue
        value = 1.0 + 0.0j
        for i, word in words.items():
            # keyed by factor position: the local coefficient slices differ
            # between factors even when the factor objects coincide
            key = (i, tuple(word))
            if key not in memo:
                memo[key] = _local_value(state, i, word, op)
            value *= memo[key]
            if value == 0:
                break
        if value == 0:
            continue
        total += crossing_sign(assign, parity, total_parity) * value
    return total


def _local_value(state, i, word, op):
    factor = state.factors[i]
    off = state.offsets[i]
    local_ops = []
    for kind, s in word:
        vec = op.u[s] if kind == "c" else op.v[s]
        local_ops.append((kind, vec[off : off + factor.modes]))
    return local_word_expectation(factor, local_ops)
