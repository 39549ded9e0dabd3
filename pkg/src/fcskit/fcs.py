"""Counting statistics of mode occupations after a one-particle rotation.

The generating function chi(z) is the expectation of U0^{-1} D U0 where D
multiplies each counted mode m by z_m (z = 0 projects onto an empty mode).
Since D - 1 has one nonzero diagonal entry per counted mode, the difference
V = U0^{-1} (D - 1) U0 has rank at most the number of counted modes, and chi
reduces to the package's low-rank machinery: a permanent for single-boson
products, the fermionic contraction otherwise.  Occupation probabilities
follow by inverting chi on a discrete z-grid of roots of unity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fcskit.errors import (
    DimensionError,
    GuardExceededError,
    NumericalError,
    UnsupportedStateError,
)
from fcskit.fock import apply_noninteracting
from fcskit.linalg import LowRankOperator, as_matrix
from fcskit.permanent import permanent_lowrank
from fcskit.fermion import expectation_lowrank
from fcskit.states import ProductState, is_single_boson_product

#: Condition-number ceiling for the basis-change matrix.
COND_CAP = 1e12
MAX_COUNT_MODES = 8
MAX_GRID = 65_536
UNITARY_TOL = 1e-10
PROB_IMAG_TOL = 1e-10
PROB_NEG_TOL = 1e-9
PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class CountingSpec:
    """A basis change U0 plus per-mode counting variables.

    ``counted`` pairs each counted mode index with its complex variable z.
    """

    u0: np.ndarray
    counted: tuple

    def __post_init__(self):
        u0 = as_matrix(self.u0, square=True)
        object.__setattr__(self, "u0", u0)
        pairs = []
        seen = set()
        for mode, z in self.counted:
            mode = int(mode)
            if not 0 <= mode < u0.shape[0]:
                raise DimensionError(f"counted mode {mode} out of range")
            if mode in seen:
                raise DimensionError(f"counted mode {mode} repeated")
            seen.add(mode)
            z = complex(z)
            if not (np.isfinite(z.real) and np.isfinite(z.imag)):
                raise ValueError("counting variables must be finite")
            pairs.append((mode, z))
        if len(pairs) > MAX_COUNT_MODES:
            raise GuardExceededError(
                f"{len(pairs)} counted modes exceed the cap of {MAX_COUNT_MODES}"
            )
        object.__setattr__(self, "counted", tuple(pairs))

    @property
    def dim(self) -> int:
        return self.u0.shape[0]


def _inverse_checked(u0: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(u0)
    if not np.isfinite(cond) or cond >= COND_CAP:
        raise NumericalError(
            f"basis change is too ill-conditioned (cond ~ {cond:.3g})"
        )
    return np.linalg.solve(u0, np.eye(u0.shape[0], dtype=np.complex128))


def counting_matrix(spec: CountingSpec) -> np.ndarray:
    """The dense one-particle matrix U0^{-1} D U0."""
    d = np.ones(spec.dim, dtype=np.complex128)
    for mode, z in spec.counted:
        d[mode] = z
    inv = _inverse_checked(spec.u0)
    return (inv * d[None, :]) @ spec.u0


def counting_lowrank(spec: CountingSpec) -> LowRankOperator:
    """U0^{-1} D U0 - 1 as a low-rank operator, one term per counted mode.

    Modes with z exactly 1 drop out and reduce the rank.
    """
    active = [(m, z) for m, z in spec.counted if z != 1.0]
    if not active:
        return LowRankOperator.zero(spec.dim)
    inv = _inverse_checked(spec.u0)
    u = np.empty((len(active), spec.dim), dtype=np.complex128)
    v = np.empty((len(active), spec.dim), dtype=np.complex128)
    for s, (mode, z) in enumerate(active):
        u[s] = (z - 1.0) * inv[:, mode]
        v[s] = spec.u0[mode, :]
    return LowRankOperator(spec.dim, u, v)


def chi(state: ProductState, spec: CountingSpec,
        backend: str | None = None) -> complex:
    """The counting generating function in a product state.

    Fermionic products use the low-rank contraction; bosonic products are
    supported when every factor is a single boson on its own mode, where chi
    is the permanent of the counting matrix.
    """
    if spec.dim != state.total_modes:
        raise DimensionError(
            f"counting matrix covers {spec.dim} modes, state has "
            f"{state.total_modes}"
        )
    op = counting_lowrank(spec)
    if state.flavor == "fermion":
        return expectation_lowrank(state, op, backend=backend)
    if is_single_boson_product(state):
        return permanent_lowrank(op, backend=backend)
    raise UnsupportedStateError(
        "bosonic counting statistics need a product of single-boson factors"
    )


def chi_oracle(state: ProductState, spec: CountingSpec) -> complex:
    """Brute-force chi through explicit Fock-space application."""
    phi = state.expand()
    return phi.inner(apply_noninteracting(counting_matrix(spec), phi))


@dataclass
class CountDistribution:
    """Joint occupation statistics of a set of counted modes.

    ``support`` lists occupation tuples in lexicographic order covering the
    full cutoff grid; ``probs`` holds the matching weights.
    """

    modes: tuple
    cutoffs: tuple
    support: list = field(default_factory=list)
    probs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def validate(self, check_sum: bool) -> None:
        if len(self.support) != self.probs.shape[0]:
            raise DimensionError("support and probabilities differ in length")
        if np.any(self.probs < -PROB_NEG_TOL):
            raise NumericalError(
                f"probability below tolerance: min {self.probs.min():.3e}"
            )
        if check_sum and abs(float(self.probs.sum()) - 1.0) > PROB_SUM_TOL:
            raise NumericalError(
                f"probabilities sum to {float(self.probs.sum())!r}, not 1"
            )

    def clamped(self) -> "CountDistribution":
        p = np.where((self.probs > -PROB_NEG_TOL) & (self.probs < 0.0),
                     0.0, self.probs)
        return CountDistribution(self.modes, self.cutoffs, list(self.support), p)


def _count_cutoffs(state: ProductState, modes) -> tuple:
    if state.flavor == "fermion":
        return tuple(1 for _ in modes)
    total = state.n_factors if is_single_boson_product(state) else None
    if total is None:
        raise UnsupportedStateError(
            "bosonic counting statistics need a product of single-boson factors"
        )
    return tuple(total for _ in modes)


def probabilities(state: ProductState, u0, modes, backend: str | None = None,
                  method: str = "lowrank") -> CountDistribution:
    """Joint occupation probabilities of ``modes`` after the rotation u0.

    chi is evaluated on the grid of roots of unity fixed by the per-mode
    cutoffs (1 for fermions, the particle number for bosons) and inverted by
    the discrete Fourier transform.  Tiny negative weights within tolerance
    are clamped to zero; with a unitary u0 the total must come out as 1.
    """
    u0 = as_matrix(u0, square=True)
    modes = tuple(int(m) for m in modes)
    if len(set(modes)) != len(modes):
        raise DimensionError("counted modes must be distinct")
    if not modes:
        raise DimensionError("need at least one counted mode")
    if len(modes) > MAX_COUNT_MODES:
        raise GuardExceededError(
            f"{len(modes)} counted modes exceed the cap of {MAX_COUNT_MODES}"
        )
    if method not in ("lowrank", "oracle"):
        raise ValueError(f"unknown method {method!r}")
    cutoffs = _count_cutoffs(state, modes)
    grid = tuple(c + 1 for c in cutoffs)
    size = 1
    for g in grid:
        size *= g
    if size > MAX_GRID:
        raise GuardExceededError(
            f"counting grid of {size} points exceeds the cap of {MAX_GRID}"
        )
    chi_grid = np.zeros(grid, dtype=np.complex128)
    for t in np.ndindex(*grid):
        zs = [
            (m, np.exp(2j * np.pi * t[j] / grid[j])) for j, m in enumerate(modes)
        ]
        spec = CountingSpec(u0, tuple(zs))
        if method == "oracle":
            chi_grid[t] = chi_oracle(state, spec)
        else:
            chi_grid[t] = chi(state, spec, backend=backend)
    # P(n) = (1/G) sum_t chi(t) exp(-2 pi i t.n / g), a forward DFT
    pvals = np.fft.fftn(chi_grid) / size
    support = [tuple(int(x) for x in t) for t in np.ndindex(*grid)]
    flat = pvals.reshape(-1)
    if np.max(np.abs(flat.imag)) > PROB_IMAG_TOL:
        raise NumericalError(
            f"probabilities have imaginary parts up to "
            f"{np.max(np.abs(flat.imag)):.3e}"
        )
    dist = CountDistribution(modes, cutoffs, support, flat.real.copy())
    gram = np.conj(u0.T) @ u0
    unitary = np.max(np.abs(gram - np.eye(u0.shape[0]))) <= UNITARY_TOL
    dist.validate(check_sum=unitary)
    return dist.clamped()


def probabilities_oracle(state: ProductState, u0, modes) -> CountDistribution:
    """Occupation statistics read off the rotated state's amplitudes."""
    u0 = as_matrix(u0, square=True)
    modes = tuple(int(m) for m in modes)
    cutoffs = _count_cutoffs(state, modes)
    grid = tuple(c + 1 for c in cutoffs)
    rotated = apply_noninteracting(u0, state.expand())
    acc: dict[tuple, float] = {}
    for cfg, amp in rotated.amps.items():
        key = tuple(min(cfg[m], cutoffs[j]) for j, m in enumerate(modes))
        acc[key] = acc.get(key, 0.0) + abs(amp) ** 2
    support = [tuple(int(x) for x in t) for t in np.ndindex(*grid)]
    probs = np.array([acc.get(t, 0.0) for t in support])
    return CountDistribution(modes, cutoffs, support, probs)


def sample_counts(dist: CountDistribution, n_samples: int, seed: int) -> list:
    """Draw occupation tuples by inverse CDF with a seeded generator."""
    if n_samples < 0:
        raise ValueError("sample count must be nonnegative")
    dist.validate(check_sum=False)
    p = np.clip(dist.probs, 0.0, None)
    total = float(p.sum())
    if total <= 0:
        raise NumericalError("cannot sample from an all-zero distribution")
    cdf = np.cumsum(p / total)
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    draws = rng.uniform(0.0, 1.0, size=n_samples)
    idx = np.searchsorted(cdf, draws, side="right")
    idx = np.minimum(idx, len(dist.support) - 1)
    return [dist.support[int(i)] for i in idx]
