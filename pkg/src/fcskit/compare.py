"""Seeded fast-path-versus-oracle comparison runs.

Each family pits a polynomial algorithm against an exponential brute-force
reference on random instances small enough for the oracle.  The CLI's
oracle-compare subcommand is a thin wrapper around :func:`run_family`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fcskit.errors import ParseError
from fcskit.fcs import CountingSpec, chi, chi_oracle
from fcskit.fermion import expectation_lowrank
from fcskit.fock import apply_noninteracting
from fcskit.linalg import LowRankOperator
from fcskit.permanent import permanent_lowrank, permanent_ryser
from fcskit.rand import generator, haar_unitary, orthonormal_rows
from fcskit.states import (
    make_fermi_sea,
    make_pair_superposition,
    make_single_boson,
    pair_reduction_check,
)

#: Per-family pass thresholds on the worst relative error.
FAMILY_TOLS = {
    "lowrank-permanent": 1e-8,
    "fermion-lowrank": 1e-9,
    "psi4-reduction": 1e-10,
    "fcs": 1e-9,
}

#: Relative-error denominators never drop below this.
_REL_FLOOR = 1e-30


@dataclass
class CompareRow:
    label: str
    value: complex
    reference: complex
    rel_err: float


@dataclass
class CompareReport:
    family: str
    tol: float
    rows: list = field(default_factory=list)

    def record(self, label: str, value: complex, reference: complex) -> None:
        err = abs(value - reference) / max(abs(reference), _REL_FLOOR)
        self.rows.append(CompareRow(label, value, reference, err))

    @property
    def max_rel_err(self) -> float:
        return max((r.rel_err for r in self.rows), default=0.0)

    @property
    def ok(self) -> bool:
        return self.max_rel_err <= self.tol


def random_lowrank(rng, n: int, k: int) -> LowRankOperator:
    """A rank-k perturbation with O(1) spectral weight at any size."""
    scale = 1.0 / np.sqrt(n)
    u = scale * (rng.normal(size=(k, n)) + 1j * rng.normal(size=(k, n)))
    v = scale * (rng.normal(size=(k, n)) + 1j * rng.normal(size=(k, n)))
    return LowRankOperator(n, u, v)


def _run_lowrank_permanent(report, rng, max_size, per_case, backend):
    for n in range(2, max_size + 1):
        for k in (1, 2, 3):
            for rep in range(per_case):
                op = random_lowrank(rng, n, k)
                fast = permanent_lowrank(op, backend=backend)
                ref = permanent_ryser(np.eye(n) + op.to_dense())
                report.record(f"N={n} k={k} rep={rep}", fast, ref)


def _fermion_cases(max_size):
    # filled seas: copies x local modes, one or two orbitals
    for copies in range(1, max_size + 1):
        for n, filled in ((2, 1), (3, 2)):
            if copies * n <= 10:
                yield "sea", copies, n, filled
    for copies in range(1, min(max_size, 3) + 1):
        yield "pairs", copies, 4, 2


def _run_fermion_lowrank(report, rng, max_size, per_case, backend):
    for kind, copies, n, filled in _fermion_cases(max_size):
        if kind == "sea":
            orbs = orthonormal_rows(rng, filled, n)
            state = make_fermi_sea(orbs, copies)
        else:
            state = make_pair_superposition(copies)
        dim = state.total_modes
        phi = state.expand()
        for k in (1, 2):
            for rep in range(per_case):
                op = random_lowrank(rng, dim, k)
                fast = expectation_lowrank(state, op, backend=backend)
                moved = apply_noninteracting(np.eye(dim) + op.to_dense(), phi)
                ref = phi.inner(moved)
                report.record(
                    f"{kind} N={copies} n={n} k={k} rep={rep}", fast, ref
                )


def _run_psi4_reduction(report, rng, max_size, per_case, backend):
    del backend  # oracle-only identity
    for copies in range(1, min(max_size, 3) + 1):
        for rep in range(per_case):
            u = haar_unitary(rng, 4 * copies)
            lhs, rhs = pair_reduction_check(u)
            report.record(f"N={copies} rep={rep}", lhs, rhs)


def _run_fcs(report, rng, max_size, per_case, backend):
    for n in range(2, max_size + 1):
        boson = make_single_boson(n)
        sea = make_fermi_sea(orthonormal_rows(rng, 1, 2), n)
        for state, tag in ((boson, "boson"), (sea, "fermion")):
            dim = state.total_modes
            for rep in range(per_case):
                u0 = haar_unitary(rng, dim)
                modes = tuple(rng.choice(dim, size=2, replace=False))
                zs = tuple(
                    (int(m), complex(rng.normal(), rng.normal())) for m in modes
                )
                spec = CountingSpec(u0, zs)
                fast = chi(state, spec, backend=backend)
                ref = chi_oracle(state, spec)
                report.record(f"{tag} N={n} rep={rep}", fast, ref)


_RUNNERS = {
    "lowrank-permanent": (_run_lowrank_permanent, 10),
    "fermion-lowrank": (_run_fermion_lowrank, 4),
    "psi4-reduction": (_run_psi4_reduction, 3),
    "fcs": (_run_fcs, 4),
}


def run_family(family: str, max_size: int | None = None, seed: int = 0,
               per_case: int = 3, backend: str | None = None) -> CompareReport:
    """Run one comparison family on seeded random instances."""
    try:
        runner, default_size = _RUNNERS[family]
    except KeyError:
        raise ParseError(
            f"unknown family {family!r}; choose from {sorted(_RUNNERS)}"
        ) from None
    if max_size is None:
        max_size = default_size
    report = CompareReport(family, FAMILY_TOLS[family])
    runner(report, generator(seed), int(max_size), int(per_case), backend)
    return report
