"""Product states of identical factors and their closed-form expectations.

A :class:`ProductState` is an ordered list of factor states, each living on
its own block of modes; the full state is the tensor product (for fermions:
the concatenated creation strings, so factor order matters to signs).  The
preset factories cover the state families used throughout: one boson per
mode, filled orbital seas, the two-pair superposition factor, and truncated
coherent factors.
"""

from __future__ import annotations

import math

import numpy as np

from fcskit.errors import DimensionError, ParseError, UnsupportedStateError
from fcskit.fock import (
    FockVector,
    apply_noninteracting,
    fock_vector_from_obj,
    fock_vector_to_obj,
    slater_vector,
    transition_overlap,
)
from fcskit.linalg import as_matrix

#: Largest deviation from unit norm a factor may carry.
NORM_TOL = 1e-12
#: Orthonormality tolerance for orbital families.
ORTHO_TOL = 1e-10


class FactorState:
    """One normalized factor of a product state, on its own local modes."""

    __slots__ = ("flavor", "modes", "amps")

    def __init__(self, flavor: str, modes: int, amps):
        vec = FockVector(flavor, modes, amps)
        if abs(vec.norm() - 1.0) > NORM_TOL:
            raise ValueError(
                f"factor state must be normalized, norm is {vec.norm()!r}"
            )
        self.flavor = vec.flavor
        self.modes = vec.modes
        self.amps = vec.amps

    def as_fock(self) -> FockVector:
        return FockVector(self.flavor, self.modes, self.amps)

    def totals(self) -> set[int]:
        """The particle numbers appearing in this factor."""
        return {sum(cfg) for cfg in self.amps}

    @property
    def parity(self) -> str:
        """'even', 'odd', or 'indefinite' particle-number parity."""
        pars = {t % 2 for t in self.totals()}
        if pars == {0}:
            return "even"
        if pars == {1}:
            return "odd"
        return "indefinite"


class ProductState:
    """An ordered tensor product of factor states of one flavor."""

    def __init__(self, factors):
        factors = list(factors)
        if not factors:
            raise ValueError("a product state needs at least one factor")
        flavors = {f.flavor for f in factors}
        if len(flavors) != 1:
            raise DimensionError("all factors must share one flavor")
        self.factors = factors
        self.flavor = factors[0].flavor
        self.offsets = []
        pos = 0
        for f in factors:
            self.offsets.append(pos)
            pos += f.modes
        self.total_modes = pos
        # caches attached by the contraction code (one-body densities etc.)
        self._pack_cache = None

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    def expand(self, max_total: int | None = None) -> FockVector:
        """The explicit Fock vector; guarded by the brute-force size limits.

        ``max_total`` truncates the product to that many particles overall
        (useful for factors of mixed particle number).
        """
        out = self.factors[0].as_fock()
        for f in self.factors[1:]:
            out = out.tensor(f.as_fock(), max_total=max_total)
        return out

    def split_vector(self, w: np.ndarray) -> list[np.ndarray]:
        """Cut a length-total_modes vector into per-factor local blocks."""
        w = np.asarray(w, dtype=np.complex128).reshape(-1)
        if w.shape[0] != self.total_modes:
            raise DimensionError(
                f"vector length {w.shape[0]} does not match {self.total_modes} modes"
            )
        return [
            w[off : off + f.modes] for off, f in zip(self.offsets, self.factors)
        ]


def make_single_boson(num_factors: int) -> ProductState:
    """One boson in each of ``num_factors`` modes."""
    if num_factors < 1:
        raise ValueError("need at least one factor")
    factor = FactorState("boson", 1, {(1,): 1.0})
    return ProductState([factor] * num_factors)


def make_fermi_sea(orbitals, copies: int) -> ProductState:
    """``copies`` identical factors, each filling the given orbitals.

    ``orbitals`` is a (k, n) array of k orthonormal one-particle amplitude
    vectors on n local modes.
    """
    orbs = check_orthonormal(orbitals)
    if copies < 1:
        raise ValueError("need at least one factor")
    sea = slater_vector(orbs, orbs.shape[1])
    factor = FactorState("fermion", orbs.shape[1], sea.amps)
    return ProductState([factor] * copies)


def make_pair_superposition(copies: int) -> ProductState:
    """Factors of two fermion pairs in superposition on four local modes:
    (|1100> + |0011>)/sqrt(2)."""
    if copies < 1:
        raise ValueError("need at least one factor")
    r = 1.0 / math.sqrt(2.0)
    factor = FactorState(
        "fermion", 4, {(1, 1, 0, 0): r, (0, 0, 1, 1): r}
    )
    return ProductState([factor] * copies)


def coherent_factor(alpha, cutoff: int) -> FactorState:
    """A single-mode coherent state truncated at ``cutoff`` particles.

    Amplitudes are proportional to alpha^j / sqrt(j!) and renormalized after
    truncation.  Only real alpha is supported.
    """
    alpha = _real_alpha(alpha)
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    amps = {}
    for j in range(cutoff + 1):
        amps[(j,)] = alpha**j / math.sqrt(math.factorial(j))
    norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    return FactorState("boson", 1, {c: a / norm for c, a in amps.items()})


def _real_alpha(alpha) -> float:
    if isinstance(alpha, complex):
        raise ValueError("complex coherent amplitudes are not supported")
    return float(alpha)


def check_orthonormal(orbitals) -> np.ndarray:
    """Validate a (k, n) family of orthonormal row vectors."""
    orbs = np.ascontiguousarray(np.atleast_2d(np.asarray(orbitals)),
                                dtype=np.complex128)
    if orbs.ndim != 2:
        raise DimensionError("orbitals must form a 2-d array")
    if orbs.shape[0] > orbs.shape[1]:
        raise DimensionError(
            f"{orbs.shape[0]} orbitals cannot be independent on {orbs.shape[1]} modes"
        )
    gram = np.conj(orbs) @ orbs.T
    if np.max(np.abs(gram - np.eye(orbs.shape[0]))) > ORTHO_TOL:
        raise ValueError("orbitals must be orthonormal")
    return orbs


# ---------------------------------------------------------------------------
# Closed-form expectation values.


def coherent_expectation(alpha, u) -> complex:
    """<C|^N U |C>^N for one coherent factor per mode, in closed form.

    Equals exp(alpha^2 (sum_ij u_ij - N)); one exponentiation regardless of
    the matrix size.
    """
    alpha = _real_alpha(alpha)
    u = as_matrix(u, square=True)
    n = u.shape[0]
    return complex(np.exp(alpha * alpha * (u.sum() - n)))


def fermi_sea_expectation(orbitals, copies: int, u) -> complex:
    """Expectation of a non-interacting operator in identical filled seas.

    The factors partition the modes into ``copies`` blocks of n; the value is
    the determinant of the (copies*k) x (copies*k) matrix of orbital overlaps
    through u's blocks.
    """
    orbs = check_orthonormal(orbitals)
    k, n = orbs.shape
    u = as_matrix(u, square=True)
    if u.shape[0] != copies * n:
        raise DimensionError(
            f"operator dimension {u.shape[0]} is not {copies} blocks of {n} modes"
        )
    blocks = u.reshape(copies, n, copies, n)
    gram = np.einsum("am,imjn,bn->iajb", np.conj(orbs), blocks, orbs)
    size = copies * k
    return complex(np.linalg.det(gram.reshape(size, size)))


def standard_pair_orbitals(copies: int) -> np.ndarray:
    """The default orbital family for the pair-superposition reduction:
    basis vectors at the first two modes of each four-mode block."""
    orbs = np.zeros((2 * copies, 4 * copies), dtype=np.complex128)
    for i in range(copies):
        orbs[2 * i, 4 * i] = 1.0
        orbs[2 * i + 1, 4 * i + 1] = 1.0
    return orbs


def pair_reduction_check(u, orbitals=None) -> tuple[complex, complex]:
    """Both sides of the pair-superposition reduction identity.

    With Phi the ``copies``-factor pair-superposition state, Y the rank-2N
    map sending the m-th orbital to the basis vector of the m-th first-pair
    mode, and x the filled sea of all 2N orbitals:

        <Phi| Y U |Phi>  =  2^{-N/2} <x| U |Phi>

    Returns (lhs, rhs); the identity holds for any square u and any
    orthonormal orbital family.  Oracle-scale only.
    """
    u = as_matrix(u, square=True)
    if u.shape[0] % 4:
        raise DimensionError("the one-particle matrix must cover 4-mode blocks")
    copies = u.shape[0] // 4
    if copies < 1:
        raise DimensionError("need at least one 4-mode block")
    if orbitals is None:
        orbs = standard_pair_orbitals(copies)
    else:
        orbs = check_orthonormal(orbitals)
    if orbs.shape != (2 * copies, 4 * copies):
        raise DimensionError(
            f"expected {2 * copies} orbitals on {4 * copies} modes, got {orbs.shape}"
        )
    targets = [m for i in range(copies) for m in (4 * i, 4 * i + 1)]
    y = np.zeros((4 * copies, 4 * copies), dtype=np.complex128)
    for m, t in enumerate(targets):
        y[t, :] += np.conj(orbs[m])
    phi = make_pair_superposition(copies).expand()
    moved = apply_noninteracting(u, phi)
    lhs = transition_overlap(y, phi, moved)
    x = slater_vector(orbs, 4 * copies)
    rhs = 2.0 ** (-copies / 2.0) * x.inner(moved)
    return lhs, rhs


def is_single_boson_product(state: ProductState) -> bool:
    """True when every factor is exactly one boson on one mode."""
    if state.flavor != "boson":
        return False
    for f in state.factors:
        if f.modes != 1 or set(f.amps) != {(1,)}:
            return False
        if abs(abs(f.amps[(1,)]) - 1.0) > NORM_TOL:
            return False
    return True


def require_single_boson_product(state: ProductState) -> None:
    if not is_single_boson_product(state):
        raise UnsupportedStateError(
            "this fast path needs a product of single-boson factors"
        )


# ---------------------------------------------------------------------------
# ProductState JSON:
#   {"flavor": "boson"|"fermion",
#    "factors": [{"local_modes": int, "amps": [{"occ": ..., "re": f, "im": f}]}]}


def product_state_to_obj(state: ProductState) -> dict:
    factors = []
    for f in state.factors:
        obj = fock_vector_to_obj(f.as_fock())
        factors.append({"local_modes": obj["modes"], "amps": obj["amps"]})
    return {"flavor": state.flavor, "factors": factors}


def product_state_from_obj(obj) -> ProductState:
    if not isinstance(obj, dict):
        raise ParseError("product state JSON must be an object")
    try:
        flavor = obj["flavor"]
        entries = obj["factors"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"product state JSON missing field: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise ParseError("factors must be a nonempty list")
    factors = []
    for entry in entries:
        if not isinstance(entry, dict) or "local_modes" not in entry:
            raise ParseError(f"bad factor entry {entry!r}")
        vec = fock_vector_from_obj(
            {"flavor": flavor, "modes": entry["local_modes"],
             "amps": entry.get("amps", [])}
        )
        try:
            factors.append(FactorState(vec.flavor, vec.modes, vec.amps))
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    return ProductState(factors)
