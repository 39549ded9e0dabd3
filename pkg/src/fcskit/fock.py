"""Brute-force Fock-space vectors and non-interacting operator application.

This is the oracle side of the package: states are explicit dictionaries
mapping occupation tuples to amplitudes, and a one-particle matrix U acts
through permanents (bosons) or determinants (fermions) of its repeated
submatrices.  Everything here is exponential in the particle number and
guarded accordingly; the polynomial algorithms elsewhere are validated
against it.

Conventions: modes are indexed from 0; a fermionic configuration lists mode
occupations 0/1 and the associated basis vector is the creation-operator
string in ascending mode order applied to the vacuum.  Tensor products
concatenate mode blocks left to right, which for fermions again yields an
ascending creation string and hence no extra sign.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from fcskit.errors import DimensionError, GuardExceededError, ParseError
from fcskit.linalg import as_matrix
from fcskit.permanent import permanent_submatrix

MAX_FOCK_PARTICLES = 12
MAX_FOCK_MODES = 24
MAX_FOCK_CONFIGS = 200_000
MAX_DIRECT_TUPLES = 2_000_000

_FLAVORS = ("boson", "fermion")


def _check_flavor(flavor: str) -> str:
    if flavor not in _FLAVORS:
        raise ValueError(f"flavor must be one of {_FLAVORS}, got {flavor!r}")
    return flavor


def _check_config(cfg, modes: int, flavor: str) -> tuple[int, ...]:
    t = tuple(int(n) for n in cfg)
    if len(t) != modes:
        raise DimensionError(f"configuration {t} does not cover {modes} modes")
    if any(n < 0 for n in t):
        raise ValueError(f"negative occupation in {t}")
    if flavor == "fermion" and any(n > 1 for n in t):
        raise ValueError(f"fermionic occupation above 1 in {t}")
    return t


class FockVector:
    """A vector in Fock space over a fixed set of modes, stored sparsely.

    ``amps`` maps occupation tuples to complex amplitudes.  Mixed total
    particle numbers are allowed (truncated coherent states need them);
    ``total_particles`` reports None in that case.
    """

    __slots__ = ("flavor", "modes", "amps")

    def __init__(self, flavor: str, modes: int, amps=None):
        self.flavor = _check_flavor(flavor)
        modes = int(modes)
        if modes < 0:
            raise DimensionError("mode count must be nonnegative")
        if modes > MAX_FOCK_MODES:
            raise GuardExceededError(
                f"{modes} modes exceeds the Fock guard of {MAX_FOCK_MODES}"
            )
        self.modes = modes
        out: dict[tuple[int, ...], complex] = {}
        for cfg, amp in (amps or {}).items():
            cfg = _check_config(cfg, modes, self.flavor)
            if sum(cfg) > MAX_FOCK_PARTICLES:
                raise GuardExceededError(
                    f"{sum(cfg)} particles exceeds the Fock guard of "
                    f"{MAX_FOCK_PARTICLES}"
                )
            amp = complex(amp)
            if amp != 0:
                out[cfg] = out.get(cfg, 0.0 + 0.0j) + amp
        self.amps = out

    @classmethod
    def vacuum(cls, flavor: str, modes: int) -> "FockVector":
        return cls(flavor, modes, {(0,) * modes: 1.0})

    @classmethod
    def basis(cls, flavor: str, modes: int, occ) -> "FockVector":
        return cls(flavor, modes, {tuple(occ): 1.0})

    def total_particles(self):
        """The common particle number of all configurations, or None."""
        totals = {sum(cfg) for cfg in self.amps}
        if len(totals) == 1:
            return totals.pop()
        return None

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amps.values()))

    def inner(self, other: "FockVector") -> complex:
        """<self|other>; the left argument is conjugated."""
        if self.flavor != other.flavor or self.modes != other.modes:
            raise DimensionError("inner product requires matching flavor and modes")
        small, big = (self, other) if len(self.amps) <= len(other.amps) else (other, self)
        total = 0.0 + 0.0j
        for cfg in small.amps:
            if cfg in big.amps:
                total += self.amps[cfg].conjugate() * other.amps[cfg]
        return total

    def scaled(self, z) -> "FockVector":
        z = complex(z)
        return FockVector(
            self.flavor, self.modes, {c: z * a for c, a in self.amps.items()}
        )

    def add(self, other: "FockVector") -> "FockVector":
        if self.flavor != other.flavor or self.modes != other.modes:
            raise DimensionError("sum requires matching flavor and modes")
        out = dict(self.amps)
        for cfg, amp in other.amps.items():
            out[cfg] = out.get(cfg, 0.0 + 0.0j) + amp
        return FockVector(self.flavor, self.modes, out)

    def tensor(self, other: "FockVector", max_total: int | None = None) -> "FockVector":
        """Concatenate mode blocks; no reordering sign arises.

        ``max_total`` drops product configurations above that particle
        number, which keeps truncated-coherent products inside the
        brute-force guards.
        """
        if self.flavor != other.flavor:
            raise DimensionError("tensor product requires matching flavor")
        out = {}
        for c1, a1 in self.amps.items():
            t1 = sum(c1)
            for c2, a2 in other.amps.items():
                if max_total is not None and t1 + sum(c2) > max_total:
                    continue
                out[c1 + c2] = a1 * a2
        return FockVector(self.flavor, self.modes + other.modes, out)

    def apply_mode_scaling(self, factors: dict) -> "FockVector":
        """Multiply each configuration by prod_m z_m^{n_m}.

        This is the diagonal counting kernel; z = 0 projects a mode onto
        emptiness (0^0 = 1 keeps unoccupied configurations).
        """
        for m in factors:
            if not 0 <= int(m) < self.modes:
                raise DimensionError(f"mode {m} out of range")
        out = {}
        for cfg, amp in self.amps.items():
            f = amp
            for m, z in factors.items():
                f *= complex(z) ** cfg[int(m)]
            out[cfg] = f
        return FockVector(self.flavor, self.modes, out)

    def __repr__(self):
        return (
            f"FockVector({self.flavor!r}, modes={self.modes}, "
            f"terms={len(self.amps)})"
        )


def enumerate_configs(flavor: str, modes: int, total: int) -> list[tuple[int, ...]]:
    """All configurations of ``total`` particles over ``modes`` modes,
    lexicographically ascending."""
    _check_flavor(flavor)
    if total < 0:
        raise ValueError("particle number must be nonnegative")
    if flavor == "fermion":
        if total > modes:
            return []
        count = math.comb(modes, total)
    else:
        count = math.comb(modes + total - 1, total) if modes else (1 if total == 0 else 0)
    if count > MAX_FOCK_CONFIGS:
        raise GuardExceededError(
            f"{count} configurations exceeds the enumeration guard of "
            f"{MAX_FOCK_CONFIGS}"
        )
    if modes == 0:
        return [()] if total == 0 else []
    if flavor == "fermion":
        out = []
        for occ_modes in itertools.combinations(range(modes), total):
            cfg = [0] * modes
            for m in occ_modes:
                cfg[m] = 1
            out.append(tuple(cfg))
        return sorted(out)

    def rec(rest_modes, rest_total):
        if rest_modes == 1:
            yield (rest_total,)
            return
        for first in range(rest_total + 1):
            for tail in rec(rest_modes - 1, rest_total - first):
                yield (first,) + tail

    return list(rec(modes, total))


def transition_element(u: np.ndarray, out_cfg, in_cfg, flavor: str) -> complex:
    """<out| U |in> for a non-interacting operator with one-particle matrix u."""
    _check_flavor(flavor)
    u = as_matrix(u, square=True)
    out_cfg = _check_config(out_cfg, u.shape[0], flavor)
    in_cfg = _check_config(in_cfg, u.shape[0], flavor)
    if sum(out_cfg) != sum(in_cfg):
        return 0.0 + 0.0j
    if flavor == "fermion":
        rows = np.flatnonzero(out_cfg)
        cols = np.flatnonzero(in_cfg)
        if rows.size == 0:
            return 1.0 + 0.0j
        return complex(np.linalg.det(u[np.ix_(rows, cols)]))
    per = permanent_submatrix(u, out_cfg, in_cfg)
    weight = 1.0
    for n in out_cfg + in_cfg:
        weight *= math.factorial(n)
    return per / math.sqrt(weight)


def apply_noninteracting(u: np.ndarray, state: FockVector,
                         method: str = "matrix") -> FockVector:
    """Apply the non-interacting operator with one-particle matrix u.

    The operator conserves particle number, so each number sector of the
    state is transformed independently.  ``method="matrix"`` fills the output
    sector through per-pair transition elements; ``method="direct"`` expands
    every creation-operator string term by term and exists to validate the
    matrix elements on very small systems.
    """
    u = as_matrix(u, square=True)
    if u.shape[0] != state.modes:
        raise DimensionError(
            f"operator acts on {u.shape[0]} modes, state has {state.modes}"
        )
    if method not in ("matrix", "direct"):
        raise ValueError(f"unknown method {method!r}")
    out: dict[tuple[int, ...], complex] = {}
    sectors: dict[int, dict[tuple[int, ...], complex]] = {}
    for cfg, amp in state.amps.items():
        sectors.setdefault(sum(cfg), {})[cfg] = amp
    for total, in_amps in sorted(sectors.items()):
        if method == "direct":
            _apply_direct(u, state.flavor, in_amps, out)
            continue
        for out_cfg in enumerate_configs(state.flavor, state.modes, total):
            acc = 0.0 + 0.0j
            for in_cfg, amp in in_amps.items():
                acc += transition_element(u, out_cfg, in_cfg, state.flavor) * amp
            if acc != 0:
                out[out_cfg] = out.get(out_cfg, 0.0 + 0.0j) + acc
    return FockVector(state.flavor, state.modes, out)


def transition_overlap(u: np.ndarray, bra: FockVector, ket: FockVector) -> complex:
    """<bra| U |ket> without materializing U|ket>.

    Sums transition elements over the bra and ket supports only, which is far
    cheaper than apply_noninteracting when the bra support is small.
    """
    u = as_matrix(u, square=True)
    if bra.flavor != ket.flavor or bra.modes != ket.modes:
        raise DimensionError("overlap requires matching flavor and modes")
    if u.shape[0] != bra.modes:
        raise DimensionError(
            f"operator acts on {u.shape[0]} modes, states have {bra.modes}"
        )
    total = 0.0 + 0.0j
    for out_cfg, b in bra.amps.items():
        for in_cfg, a in ket.amps.items():
            total += (
                b.conjugate()
                * transition_element(u, out_cfg, in_cfg, bra.flavor)
                * a
            )
    return total


def _apply_direct(u, flavor, in_amps, out):
    """Term-by-term expansion of U applied to each creation string."""
    modes = u.shape[0]
    for in_cfg, amp in in_amps.items():
        total = sum(in_cfg)
        if modes**total > MAX_DIRECT_TUPLES:
            raise GuardExceededError(
                f"direct expansion needs {modes**total} terms "
                f"(cap {MAX_DIRECT_TUPLES})"
            )
        in_modes = [m for m in range(modes) for _ in range(in_cfg[m])]
        norm_in = 1.0
        for n in in_cfg:
            norm_in *= math.factorial(n)
        for targets in itertools.product(range(modes), repeat=total):
            coeff = amp / math.sqrt(norm_in)
            for tgt, src in zip(targets, in_modes):
                coeff *= u[tgt, src]
            if coeff == 0:
                continue
            if flavor == "fermion":
                if len(set(targets)) != total:
                    continue
                # sign of sorting the creation string into ascending order
                perm = np.argsort(targets, kind="stable")
                sign = _perm_sign(perm)
                cfg = [0] * modes
                for t in targets:
                    cfg[t] = 1
                cfg = tuple(cfg)
                out[cfg] = out.get(cfg, 0.0 + 0.0j) + sign * coeff
            else:
                cfg = [0] * modes
                for t in targets:
                    cfg[t] += 1
                cfg = tuple(cfg)
                norm_out = 1.0
                for n in cfg:
                    norm_out *= math.factorial(n)
                out[cfg] = out.get(cfg, 0.0 + 0.0j) + coeff * math.sqrt(norm_out)


def _perm_sign(perm) -> int:
    """Parity of a permutation given as an index array."""
    perm = list(perm)
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def slater_vector(orbitals, modes: int) -> FockVector:
    """The fermionic state filling the given one-particle orbitals.

    ``orbitals`` has one orbital per row, each a length-``modes`` amplitude
    vector; the state is the ordered product of their creation operators on
    the vacuum.  Expanding in the occupation basis gives one determinant per
    mode subset: rows are orbitals, columns the chosen modes ascending.
    """
    orbs = np.asarray(orbitals, dtype=np.complex128)
    if orbs.ndim != 2 or orbs.shape[1] != modes:
        raise DimensionError(
            f"expected orbitals shaped (k, {modes}), got {orbs.shape}"
        )
    k = orbs.shape[0]
    if k == 0:
        return FockVector.vacuum("fermion", modes)
    amps = {}
    for cfg in enumerate_configs("fermion", modes, k):
        cols = np.flatnonzero(cfg)
        amp = complex(np.linalg.det(orbs[:, cols]))
        if amp != 0:
            amps[cfg] = amp
    return FockVector("fermion", modes, amps)


def boson_weight(cfg) -> float:
    """sqrt(prod_m n_m!), the creation-string normalization of ``cfg``."""
    w = 1.0
    for n in cfg:
        w *= math.factorial(n)
    return math.sqrt(w)


# ---------------------------------------------------------------------------
# FockVector JSON:
#   {"flavor": "boson"|"fermion", "modes": int,
#    "amps": [{"occ": [ints], "re": f, "im": f}, ...]}
# Writers emit configurations in lexicographic order, 17 significant digits.


def fock_vector_to_obj(vec: FockVector) -> dict:
    amps = [
        {"occ": list(cfg), "re": a.real, "im": a.imag}
        for cfg, a in sorted(vec.amps.items())
    ]
    return {"flavor": vec.flavor, "modes": vec.modes, "amps": amps}


def fock_vector_from_obj(obj) -> FockVector:
    if not isinstance(obj, dict):
        raise ParseError("Fock vector JSON must be an object")
    try:
        flavor = obj["flavor"]
        modes = int(obj["modes"])
        entries = obj["amps"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"Fock vector JSON missing/invalid field: {exc}") from exc
    if not isinstance(entries, list):
        raise ParseError("amps must be a list of occupation entries")
    amps = {}
    for entry in entries:
        try:
            cfg = tuple(int(n) for n in entry["occ"])
            amp = complex(float(entry["re"]), float(entry["im"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad amplitude entry {entry!r}: {exc}") from exc
        amps[cfg] = amps.get(cfg, 0.0 + 0.0j) + amp
    try:
        return FockVector(flavor, modes, amps)
    except (ValueError, DimensionError) as exc:
        raise ParseError(str(exc)) from exc
