# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the permanent and fermionic contractions.

Built optionally; ``fcskit._backend`` falls back to ``fcskit._pure`` when this
extension is missing.  Each routine documents the traversal order because the
table updates run in place.
"""

import numpy as np

cimport numpy as cnp


def ryser(double complex[:, ::1] a):
    """Permanent by Gray-code inclusion-exclusion, O(2^n * n)."""
    cdef Py_ssize_t n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > 62:
        raise ValueError("ryser kernel limited to 62 rows")
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] rowsums_arr = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] rowsums = rowsums_arr
    cdef double complex total = 0
    cdef double complex prod
    cdef unsigned long long step, members = 0, bit
    cdef unsigned long long last = (<unsigned long long> 1 << n) - 1
    cdef int size_sign = 1
    cdef Py_ssize_t i, j
    for step in range(1, last + 1):
        j = 0
        while not (step >> j) & 1:
            j += 1
        bit = <unsigned long long> 1 << j
        members ^= bit
        if members & bit:
            for i in range(n):
                rowsums[i] = rowsums[i] + a[i, j]
        else:
            for i in range(n):
                rowsums[i] = rowsums[i] - a[i, j]
        size_sign = -size_sign
        prod = 1
        for i in range(n):
            prod = prod * rowsums[i]
        if size_sign > 0:
            total = total + prod
        else:
            total = total - prod
    if n & 1:
        total = -total
    return complex(total)


def dense_poly_factor(double complex[::1] flat, int k, Py_ssize_t base, int d,
                      double complex[:, :, ::1] cs):
    """Multiply the dense coefficient table in place by one polynomial factor.

    ``flat`` is the row-major (base,)*2k table; the first k axes carry the
    u-degrees, the last k the v-degrees.  Both degree tuples are walked through
    the full (d+1)^k box in descending flat order, so every source entry
    (one step down in one u-degree and one v-degree) is read before it is
    rewritten.  Entries whose total degrees disagree are skipped by the
    equal-degree test and never written.  ``cs[t]`` is the factor's coefficient
    matrix as seen by entries of total degree t; the extra axis carries the
    per-degree scale adjustment (see DiagonalCoeffTable).
    """
    cdef int[16] nu
    cdef int[16] nv
    cdef Py_ssize_t[16] su
    cdef Py_ssize_t[16] sv
    if k < 1 or k > 16:
        raise ValueError("rank out of range for the dense kernel")
    cdef Py_ssize_t stride = 1
    cdef int s, t
    for s in range(k - 1, -1, -1):
        sv[s] = stride
        stride *= base
    for s in range(k - 1, -1, -1):
        su[s] = stride
        stride *= base
    cdef Py_ssize_t off_u = 0, off_v0 = 0, off_v, target
    cdef int sum_u = k * d, sum_v
    cdef double complex acc
    for s in range(k):
        nu[s] = d
        off_u += d * su[s]
        off_v0 += d * sv[s]
    while True:
        # inner odometer over the v-degree box, descending
        for t in range(k):
            nv[t] = d
        sum_v = k * d
        off_v = off_v0
        while True:
            if sum_u == sum_v:
                acc = 0
                for s in range(k):
                    if nu[s] > 0:
                        for t in range(k):
                            if nv[t] > 0:
                                acc = acc + cs[sum_u, s, t] * flat[off_u - su[s] + off_v - sv[t]]
                target = off_u + off_v
                flat[target] = flat[target] + acc
            t = k - 1
            while t >= 0 and nv[t] == 0:
                nv[t] = d
                sum_v += d
                off_v += d * sv[t]
                t -= 1
            if t < 0:
                break
            nv[t] -= 1
            sum_v -= 1
            off_v -= sv[t]
        s = k - 1
        while s >= 0 and nu[s] == 0:
            nu[s] = d
            sum_u += d
            off_u += d * su[s]
            s -= 1
        if s < 0:
            break
        nu[s] -= 1
        sum_u -= 1
        off_u -= su[s]


def sliced_poly_factor(double complex[:, ::1] dst, double complex[:, ::1] src,
                       int[:, ::1] pu, int[:, ::1] pv, double complex[:, ::1] c):
    """Add one factor's contribution to a degree slice.

    dst[i, j] += sum_{s,t} c[s, t] * src[pu[i, s], pv[j, t]], where a parent
    index of -1 marks a composition with a zero component in that slot (no
    source entry).
    """
    cdef Py_ssize_t m = dst.shape[0]
    cdef int k = c.shape[0]
    cdef Py_ssize_t i, j
    cdef int s, t, p, q
    cdef double complex acc
    for i in range(m):
        for j in range(m):
            acc = 0
            for s in range(k):
                p = pu[i, s]
                if p >= 0:
                    for t in range(k):
                        q = pv[j, t]
                        if q >= 0:
                            acc = acc + c[s, t] * src[p, q]
            dst[i, j] = dst[i, j] + acc


def fermion_rank1_word(double complex[:, ::1] u_blk, double complex[:, ::1] v_blk,
                       double complex[:, :, ::1] rho,
                       double complex[::1] su, double complex[::1] sv,
                       unsigned char[::1] parity):
    """Sum the N^2 factor assignments of one creation/annihilation pair.

    On-factor assignments contract the factor's one-body density matrix
    (memoized per factor); cross-factor assignments multiply the two
    single-operator expectations with the reordering sign.  Cost is quadratic
    in the number of factors by construction.
    """
    cdef Py_ssize_t n_fac = u_blk.shape[0]
    cdef Py_ssize_t nloc = u_blk.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] val_arr = np.zeros(n_fac, dtype=np.complex128)
    cdef double complex[::1] val = val_arr
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] have_arr = np.zeros(n_fac, dtype=np.uint8)
    cdef unsigned char[::1] have = have_arr
    cdef double complex acc = 0, diag, row
    cdef double sign
    cdef Py_ssize_t i, j, m, mm
    for i in range(n_fac):
        for j in range(n_fac):
            if i == j:
                if not have[i]:
                    diag = 0
                    for m in range(nloc):
                        row = 0
                        for mm in range(nloc):
                            row = row + rho[i, m, mm] * v_blk[i, mm]
                        diag = diag + u_blk[i, m] * row
                    val[i] = diag
                    have[i] = 1
                acc = acc + val[i]
            else:
                sign = 1.0 if i < j else -1.0
                if (parity[i] + parity[j]) & 1:
                    sign = -sign
                acc = acc + sign * su[i] * sv[j]
    return complex(acc)
