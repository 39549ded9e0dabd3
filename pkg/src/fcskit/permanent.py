"""Permanents of low-rank perturbations of the identity.

Two routes are provided.  ``permanent_ryser`` is the exponential-time
inclusion-exclusion formula, usable up to about 30 rows and kept as the
reference oracle.  ``permanent_lowrank`` evaluates Per(1 + V) for a rank-k
matrix V = u^T v in polynomial time by building the generating polynomial

    prod_x (1 + sum_{s,t} a_u^(s) a_v^(t) u[s, x] v[t, x])

in 2k formal variables and contracting its equal-degree coefficients with
factorial weights.  The coefficient table costs O(N^{2k+1}) to build and is
stored either dense (small k) or sliced by total degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from fcskit import _backend, _pure
from fcskit.errors import DimensionError, GuardExceededError
from fcskit.linalg import LowRankOperator, as_matrix

MAX_RYSER_DIM = 30
# Coefficient storage caps, in complex entries (the dense cap is ~128 MiB).
DENSE_CAP = 1 << 23
SLICED_CAP = 1 << 23
# Largest total degree whose factorial weights stay exact in float64 products.
MAX_DIRECT_CONTRACT = 170


def permanent_ryser(a: np.ndarray, backend: str | None = None) -> complex:
    """Permanent of a general square matrix, O(2^n * n)."""
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if n > MAX_RYSER_DIM:
        raise GuardExceededError(
            f"ryser permanent limited to {MAX_RYSER_DIM} rows, got {n}"
        )
    return _backend.kernels(backend or "auto").ryser(a)


def permanent_submatrix(a: np.ndarray, row_counts, col_counts,
                        backend: str | None = None) -> complex:
    """Permanent of the submatrix with rows/columns repeated per occupation.

    ``row_counts[i]`` copies of row i and ``col_counts[j]`` copies of column j
    are taken, in ascending index order.  The two totals must agree.
    """
    a = as_matrix(a, square=True)
    row_counts = np.asarray(row_counts, dtype=np.int64)
    col_counts = np.asarray(col_counts, dtype=np.int64)
    if row_counts.shape != (a.shape[0],) or col_counts.shape != (a.shape[1],):
        raise DimensionError("occupation lengths must match the matrix dimension")
    if np.any(row_counts < 0) or np.any(col_counts < 0):
        raise ValueError("occupations must be nonnegative")
    total = int(row_counts.sum())
    if total != int(col_counts.sum()):
        raise DimensionError("row and column occupation totals differ")
    if total > MAX_RYSER_DIM:
        raise GuardExceededError(
            f"repeated submatrix has {total} rows; limit is {MAX_RYSER_DIM}"
        )
    rows = np.repeat(np.arange(a.shape[0]), row_counts)
    cols = np.repeat(np.arange(a.shape[1]), col_counts)
    sub = np.ascontiguousarray(a[np.ix_(rows, cols)])
    return _backend.kernels(backend or "auto").ryser(sub)


class LogComplex(NamedTuple):
    """A complex value stored as log-magnitude plus unit phase."""

    log_abs: float
    phase: complex

    def to_complex(self) -> complex:
        """Exponentiate; overflows saturate to infinite magnitude."""
        if self.log_abs == -math.inf:
            return 0.0 + 0.0j
        try:
            mag = math.exp(self.log_abs)
        except OverflowError:
            mag = math.inf
        re = 0.0 if self.phase.real == 0.0 else mag * self.phase.real
        im = 0.0 if self.phase.imag == 0.0 else mag * self.phase.imag
        return complex(re, im)


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """All nonnegative integer tuples of the given length summing to total,
    in lexicographic order."""
    if parts == 1:
        return [(total,)]
    out = []
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            out.append((head,) + tail)
    return out


@dataclass
class _DegreeTables:
    """Per-total-degree composition bookkeeping shared by both storage modes."""

    comps: list[np.ndarray] = field(default_factory=list)   # (m_d, k) int32
    parents: list[np.ndarray] = field(default_factory=list)  # (m_d, k) int32, -1 = none
    offsets: list[np.ndarray] = field(default_factory=list)  # (m_d,) int64 flat offsets
    log_weights: list[np.ndarray] = field(default_factory=list)  # sum of log n_r!


def _build_degree_tables(rank: int, max_degree: int, base: int) -> _DegreeTables:
    tabs = _DegreeTables()
    lgam = gammaln(np.arange(max_degree + 1) + 1.0)
    if rank == 1:
        # vectorized: one composition per degree, so every parent position is 0
        # (slice d-1 holds the single composition (d-1,)) except at degree 0
        allc = np.arange(max_degree + 1, dtype=np.int32).reshape(-1, 1)
        allp = np.zeros((max_degree + 1, 1), dtype=np.int32)
        allp[0, 0] = -1
        alloff = np.arange(max_degree + 1, dtype=np.int64)
        for d in range(max_degree + 1):
            tabs.comps.append(allc[d : d + 1])
            tabs.parents.append(allp[d : d + 1])
            tabs.offsets.append(alloff[d : d + 1])
            tabs.log_weights.append(lgam[d : d + 1])
        return tabs
    strides = base ** np.arange(rank - 1, -1, -1, dtype=np.int64)
    prev_pos: dict[tuple[int, ...], int] = {}
    for d in range(max_degree + 1):
        comp_list = _compositions(d, rank)
        comps = np.array(comp_list, dtype=np.int32).reshape(len(comp_list), rank)
        pos = {c: i for i, c in enumerate(comp_list)}
        parents = np.full((len(comp_list), rank), -1, dtype=np.int32)
        for i, c in enumerate(comp_list):
            for s in range(rank):
                if c[s] > 0:
                    parent = c[:s] + (c[s] - 1,) + c[s + 1:]
                    parents[i, s] = prev_pos[parent]
        tabs.comps.append(comps)
        tabs.parents.append(np.ascontiguousarray(parents))
        tabs.offsets.append(comps.astype(np.int64) @ strides)
        tabs.log_weights.append(lgam[comps].sum(axis=1))
        prev_pos = pos
    return tabs


class DiagonalCoeffTable:
    """Equal-degree coefficients of the low-rank generating polynomial.

    Coefficients whose u- and v-degree totals differ vanish identically and
    are never stored or written: the dense mode keeps them as untouched zeros
    in a (N+1,)*2k array, the sliced mode only allocates one square block per
    total degree.

    To cover the coefficients' dynamic range at large dimension (elementary
    symmetric functions span hundreds of orders of magnitude while the
    factorial weights favor the smallest, highest-degree ones) every total
    degree d carries a log-scale: the true coefficient is the stored value
    times exp(log_scale[d]).  Scales stay zero until a stored magnitude
    leaves a wide safety window, so small problems are computed verbatim.
    """

    def __init__(self, rank: int, max_degree: int, mode: str):
        if mode not in ("dense", "sliced"):
            raise ValueError(f"unknown table mode {mode!r}")
        self.rank = rank
        self.max_degree = max_degree
        self.mode = mode
        self.base = max_degree + 1
        self._tabs = _build_degree_tables(rank, max_degree, self.base)
        self.log_scale = np.zeros(self.base)
        self._scaled = False
        self._born = 0
        # coefficient matrices by the total degree of the updated entry; rows
        # past max_degree only ever multiply zero sources
        self._cs = np.zeros((rank * max_degree + 1, rank, rank), dtype=np.complex128)
        if mode == "dense":
            self.dense = np.zeros((self.base,) * (2 * rank), dtype=np.complex128)
            self._flat = self.dense.reshape(-1)
            self._flat[0] = 1.0
            self.slices = None
        else:
            self.dense = None
            self.slices = [
                np.zeros((len(c), len(c)), dtype=np.complex128) for c in self._tabs.comps
            ]
            self.slices[0][0, 0] = 1.0
        self._pos_cache: list[dict[tuple[int, ...], int]] | None = None

    def _positions(self, d: int) -> dict[tuple[int, ...], int]:
        if self._pos_cache is None:
            self._pos_cache = [
                {tuple(int(x) for x in row): i for i, row in enumerate(c)}
                for c in self._tabs.comps
            ]
        return self._pos_cache[d]

    def coeff(self, nu, nv) -> complex:
        """Coefficient of the monomial with u-degrees nu and v-degrees nv."""
        nu = tuple(int(x) for x in nu)
        nv = tuple(int(x) for x in nv)
        if len(nu) != self.rank or len(nv) != self.rank:
            raise ValueError("degree tuples must have length equal to the rank")
        if min(nu + nv, default=0) < 0 or max(nu + nv, default=0) > self.max_degree:
            return 0.0 + 0.0j
        du, dv = sum(nu), sum(nv)
        if du > self.max_degree or dv > self.max_degree:
            return 0.0 + 0.0j
        if self.mode == "dense":
            raw = complex(self.dense[nu + nv])
        elif du != dv:
            return 0.0 + 0.0j
        else:
            pos = self._positions(du)
            raw = complex(self.slices[du][pos[nu], pos[nv]])
        if not self._scaled or raw == 0 or du != dv:
            return raw
        try:
            return raw * math.exp(self.log_scale[du])
        except OverflowError:
            return complex(math.inf * raw.real, math.inf * raw.imag)

    def apply_factor(self, c: np.ndarray, bound: int, backend: str) -> None:
        """Multiply in place by one polynomial factor with coefficient matrix c.

        ``bound`` limits the total degree that can be populated after this
        factor (the number of factors applied so far).  The per-degree scale
        adjustments exp(log_scale[d-1] - log_scale[d]) are folded into the
        coefficient matrix handed to the kernels.
        """
        if bound > self._born:
            # a degree slice populated for the first time inherits its parent's
            # scale, otherwise its entries would start hundreds of orders of
            # magnitude away from 1
            self.log_scale[self._born + 1 : bound + 1] = self.log_scale[self._born]
            self._born = bound
        cs = self._cs
        if not self._scaled:
            cs[1 : bound + 1] = c
        else:
            adj = np.exp(self.log_scale[:bound] - self.log_scale[1 : bound + 1])
            cs[1 : bound + 1] = c[None, :, :] * adj[:, None, None]
        if backend == "compiled":
            kern = _backend.kernels("compiled")
            if self.mode == "dense":
                kern.dense_poly_factor(self._flat, self.rank, self.base, bound, cs)
            else:
                for d in range(bound, 0, -1):
                    kern.sliced_poly_factor(
                        self.slices[d], self.slices[d - 1],
                        self._tabs.parents[d], self._tabs.parents[d], cs[d],
                    )
        else:
            if self.mode == "dense":
                _pure.dense_poly_factor(
                    self._flat, self.rank, self.base, bound, cs, self._tabs
                )
            else:
                for d in range(bound, 0, -1):
                    _pure.sliced_poly_factor(
                        self.slices[d], self.slices[d - 1],
                        self._tabs.parents[d], self._tabs.parents[d], cs[d],
                    )

    # magnitude window outside which a degree slice is renormalized
    _RESCALE_HI = 1e120
    _RESCALE_LO = 1e-120

    def rescale(self, bound: int) -> None:
        """Pull each populated degree slice back into the magnitude window.

        Divides slice d by its largest absolute entry when that leaves
        [1e-120, 1e120] and accounts for it in ``log_scale[d]``.  Degree-0
        is pinned (the constant term is exactly 1).
        """
        # scaling runs as two multiplications by exp(-L/2): a single divide or
        # reciprocal would misbehave when the magnitude sits near the edge of
        # the float64 range
        if self.mode == "dense":
            bk = self.base**self.rank
            if self.rank == 1:
                degs = np.arange(1, bound + 1)
                idx = degs * (bk + 1)
                vals = self._flat[idx]
                mx = np.abs(vals)
                sel = (mx > self._RESCALE_HI) | ((mx > 0) & (mx < self._RESCALE_LO))
                if np.any(sel):
                    ell = np.log(mx[sel])
                    half = np.exp(-0.5 * ell)
                    self._flat[idx[sel]] = vals[sel] * half * half
                    self.log_scale[degs[sel]] += ell
                    self._scaled = True
                return
            for d in range(1, bound + 1):
                offs = self._tabs.offsets[d]
                block_idx = offs[:, None] * bk + offs[None, :]
                block = self._flat[block_idx]
                mx = float(np.abs(block).max())
                if mx > self._RESCALE_HI or 0 < mx < self._RESCALE_LO:
                    half = math.exp(-0.5 * math.log(mx))
                    self._flat[block_idx] = block * half * half
                    self.log_scale[d] += math.log(mx)
                    self._scaled = True
            return
        for d in range(1, bound + 1):
            mx = float(np.abs(self.slices[d]).max())
            if mx > self._RESCALE_HI or 0 < mx < self._RESCALE_LO:
                half = math.exp(-0.5 * math.log(mx))
                self.slices[d] *= half
                self.slices[d] *= half
                self.log_scale[d] += math.log(mx)
                self._scaled = True

    def diagonal_values(self, d: int) -> np.ndarray:
        """Stored coefficients F_{n,n} over compositions n of total degree d.

        True values are these times exp(log_scale[d]).
        """
        if self.mode == "dense":
            bk = self.base**self.rank
            offs = self._tabs.offsets[d]
            return self._flat[offs * bk + offs]
        return np.diagonal(self.slices[d]).copy()

    def contract(self) -> complex:
        """sum_n F_{n,n} * prod_r n_r!, the permanent of 1 plus the operator."""
        if self._scaled or self.max_degree > MAX_DIRECT_CONTRACT:
            return self.contract_log().to_complex()
        # exact factorials keep small integer cases exact; 170! still fits
        fact = np.array(
            [math.factorial(i) for i in range(self.max_degree + 1)], dtype=float
        )
        total = 0.0 + 0.0j
        for d in range(self.max_degree + 1):
            w = np.prod(fact[self._tabs.comps[d]], axis=1)
            total += complex(self.diagonal_values(d) @ w)
        return total

    def contract_log(self) -> LogComplex:
        """The same contraction carried out in the log domain.

        Safe for degrees where the factorial weights overflow float64; uses a
        max-shift before summing the exponentials.
        """
        logs = []
        vals = []
        for d in range(self.max_degree + 1):
            diag = self.diagonal_values(d)
            nz = diag != 0
            if not np.any(nz):
                continue
            mags = np.abs(diag[nz])
            logs.append(np.log(mags) + self._tabs.log_weights[d][nz] + self.log_scale[d])
            vals.append(diag[nz] / mags)
        if not logs:
            return LogComplex(-math.inf, 0.0 + 0.0j)
        log_all = np.concatenate(logs)
        phase_all = np.concatenate(vals)
        shift = float(log_all.max())
        s = complex(np.sum(phase_all * np.exp(log_all - shift)))
        if s == 0:
            return LogComplex(-math.inf, 0.0 + 0.0j)
        return LogComplex(shift + math.log(abs(s)), s / abs(s))


def _resolve_mode(rank: int, dim: int, mode: str) -> str:
    dense_entries = (dim + 1) ** (2 * rank)
    if mode == "auto":
        mode = "dense" if (rank <= 2 and dense_entries <= DENSE_CAP) else "sliced"
    if mode == "dense" and dense_entries > DENSE_CAP:
        raise GuardExceededError(
            f"dense coefficient table needs {dense_entries} entries (cap {DENSE_CAP})"
        )
    if mode == "sliced":
        sliced_entries = sum(
            math.comb(d + rank - 1, rank - 1) ** 2 for d in range(dim + 1)
        )
        if sliced_entries > SLICED_CAP:
            raise GuardExceededError(
                f"sliced coefficient table needs {sliced_entries} entries "
                f"(cap {SLICED_CAP})"
            )
    return mode


def build_aux_polynomial(op: LowRankOperator, mode: str = "auto",
                         backend: str | None = None) -> DiagonalCoeffTable:
    """Build the coefficient table of the generating polynomial for 1 + u^T v."""
    backend = _backend.resolve_backend(backend)
    rank, dim = op.rank, op.dim
    if rank == 0:
        table = DiagonalCoeffTable(1, 0, "sliced" if mode == "sliced" else "dense")
        return table
    mode = _resolve_mode(rank, dim, mode)
    table = DiagonalCoeffTable(rank, dim, mode)
    # coefficient matrix of factor x: c[s, t] = u[s, x] * v[t, x]
    coeff_mats = np.ascontiguousarray(np.einsum("sx,tx->xst", op.u, op.v))
    # rescale often enough that no slice can cross the float64 range between
    # checks; the growth/shrink rate per factor is bounded by the coefficient
    # magnitudes
    absc = np.abs(coeff_mats).max(axis=(1, 2))
    max_c = float(absc.max(initial=0.0))
    min_c = float(absc[absc > 0].min()) if np.any(absc > 0) else 1.0
    grow = math.log10(1.0 + rank * rank * max_c)
    shrink = abs(math.log10(max(min_c, 1e-60)))
    rate = max(grow, shrink, 2.0)
    interval = max(1, min(32, int(60.0 / rate)))
    for x in range(dim):
        table.apply_factor(coeff_mats[x], x + 1, backend)
        if (x + 1) % interval == 0:
            table.rescale(x + 1)
    return table


def permanent_lowrank(op: LowRankOperator, mode: str = "auto",
                      backend: str | None = None) -> complex:
    """Per(1 + V) for V = u^T v of rank k, in O(N^{2k+1}) time.

    For dimensions above ~170 the factorial contraction runs in the log
    domain; magnitudes beyond float64 range come back as infinities, in which
    case ``permanent_lowrank_log`` has the finite representation.
    """
    table = build_aux_polynomial(op, mode=mode, backend=backend)
    return table.contract()


def permanent_lowrank_log(op: LowRankOperator, mode: str = "auto",
                          backend: str | None = None) -> LogComplex:
    """Like ``permanent_lowrank`` but returning log-magnitude and phase."""
    table = build_aux_polynomial(op, mode=mode, backend=backend)
    if op.dim <= MAX_DIRECT_CONTRACT:
        val = table.contract()
        if val == 0:
            return LogComplex(-math.inf, 0.0 + 0.0j)
        if math.isfinite(abs(val)):
            return LogComplex(math.log(abs(val)), val / abs(val))
    return table.contract_log()
