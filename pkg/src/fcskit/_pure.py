"""Pure-Python/numpy implementations of the hot kernels.

These mirror the compiled routines in ``fcskit._kernels`` and are selected at
import time when the extension is unavailable (see ``fcskit._backend``).  The
results are identical up to floating-point association differences; the
iteration strategies differ where numpy vectorization demands it.
"""

from __future__ import annotations

import numpy as np


def ryser(a: np.ndarray) -> complex:
    """Permanent by inclusion-exclusion over column subsets in Gray-code order.

    O(2^n * n): one column of row sums is patched per subset step.
    """
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    rowsums = np.zeros(n, dtype=np.complex128)
    total = 0.0 + 0.0j
    members = 0
    size_sign = 1
    for step in range(1, 1 << n):
        j = (step & -step).bit_length() - 1
        bit = 1 << j
        members ^= bit
        if members & bit:
            rowsums += a[:, j]
        else:
            rowsums -= a[:, j]
        size_sign = -size_sign
        total += size_sign * np.prod(rowsums)
    if n % 2:
        total = -total
    return complex(total)


# ---------------------------------------------------------------------------
# Generating-polynomial table updates.
#
# The table holds coefficients F over multi-degree pairs (n_1..n_k, n'_1..n'_k);
# one call multiplies it in place by one factor
#     1 + sum_{s,t} c[s, t] * a_u^(s) * a_v^(t)
# of the degree-2N generating polynomial.  Only entries with equal total
# u- and v-degree are ever touched, so the off-diagonal-degree region of a
# dense table stays bitwise zero.


def dense_poly_factor(flat, k, base, d, cs, index_aux):
    """In-place dense-table update for one polynomial factor.

    ``flat`` is the row-major (base,)*2k table; ``d`` bounds the total degree
    after this factor and ``cs[t]`` is the coefficient matrix seen by entries
    of total degree t.  ``index_aux`` carries precomputed composition offsets
    (see ``permanent._DegreeTables``); the update walks total degrees downward
    so sources are still unmodified.
    """
    bk = base**k
    if k == 1:
        table = flat.reshape(base, base)
        idx = np.arange(1, d + 1)
        table[idx, idx] += cs[idx, 0, 0] * table[idx - 1, idx - 1]
        return
    offs, parents = index_aux.offsets, index_aux.parents
    for t in range(d, 0, -1):
        src = flat[offs[t - 1][:, None] * bk + offs[t - 1][None, :]]
        upd = _parent_gather(src, parents[t], parents[t], cs[t])
        flat[offs[t][:, None] * bk + offs[t][None, :]] += upd


def _parent_gather(src, pu, pv, c):
    """sum_{s,t} c[s,t] * src[pu[i,s], pv[j,t]] with -1 parents reading zero."""
    m_src = src.shape[0]
    pad = np.zeros((m_src + 1, m_src + 1), dtype=np.complex128)
    pad[:m_src, :m_src] = src
    out = np.zeros((pu.shape[0], pv.shape[0]), dtype=np.complex128)
    k = c.shape[0]
    for s in range(k):
        rows = pad[pu[:, s], :]
        for t in range(k):
            out += c[s, t] * rows[:, pv[:, t]]
    return out


def sliced_poly_factor(dst, src, pu, pv, c):
    """Degree-sliced update: dst (slice d) += contributions from src (slice d-1)."""
    dst += _parent_gather(src, pu, pv, c)


# ---------------------------------------------------------------------------
# Fermionic degree-1 word enumeration.


def fermion_rank1_word(u_blk, v_blk, rho, su, sv, parity) -> complex:
    """Sum the N^2 factor assignments of one creation/annihilation pair.

    ``rho[i]`` is factor i's one-body density matrix, used for the on-factor
    terms; ``su``/``sv`` are the single-operator expectations used by the
    cross-factor terms (identically zero for definite-parity factors, which is
    what makes those assignments drop out).  ``parity`` holds fermion-number
    parities, one per factor.
    """
    n_fac = u_blk.shape[0]
    have = [False] * n_fac
    val = [0.0 + 0.0j] * n_fac
    su_l = [complex(z) for z in su]
    sv_l = [complex(z) for z in sv]
    par = [int(p) for p in parity]
    acc = 0.0 + 0.0j
    for i in range(n_fac):
        ui = su_l[i]
        pi = par[i]
        for j in range(n_fac):
            if i == j:
                if not have[i]:
                    val[i] = complex(u_blk[i] @ rho[i] @ v_blk[i])
                    have[i] = True
                acc += val[i]
            else:
                sign = 1.0 if i < j else -1.0
                if (pi + par[j]) & 1:
                    sign = -sign
                acc += sign * ui * sv_l[j]
    return acc
