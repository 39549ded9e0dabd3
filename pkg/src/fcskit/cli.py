"""Command-line interface.

JSON in, JSON/CSV out; all commands are deterministic for fixed inputs,
flags, and seeds.  Exit codes: 0 success, 1 oracle-compare failure, 2 parse
or validation error, 3 guard exceeded, 4 unsupported state, 5 numerical
failure.

The optional FCS_KIT_THREADS environment variable (0 = auto) declares a
thread budget for inner loops.  The present implementation is sequential, so
the value is validated and recorded but does not change any result; see the
concurrency notes in the README.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from fcskit import bench as bench_mod
from fcskit import compare as compare_mod
from fcskit.errors import (
    DimensionError,
    FcskitError,
    GuardExceededError,
    NumericalError,
    ParseError,
    UnsupportedStateError,
)
from fcskit.fcs import CountingSpec, chi, probabilities
from fcskit.fock import fock_vector_to_obj
from fcskit.linalg import (
    LowRankOperator,
    dense_to_lowrank,
    load_matrix,
    matrix_from_obj,
)
from fcskit.permanent import permanent_lowrank, permanent_ryser
from fcskit.states import (
    ProductState,
    make_fermi_sea,
    make_pair_superposition,
    make_single_boson,
    product_state_from_obj,
)

PRESETS = ("single_boson", "fermi_sea", "psi4")


def _check_threads_env() -> int:
    raw = os.environ.get("FCS_KIT_THREADS")
    if raw is None:
        return 0
    try:
        n = int(raw)
    except ValueError:
        raise ParseError(f"FCS_KIT_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ParseError("FCS_KIT_THREADS must be nonnegative (0 = auto)")
    return n


def _bool_flag(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _fmt_complex(z: complex, precision: int) -> str:
    z = complex(z)
    if z.imag == 0.0:
        return f"{z.real:.{precision}g}"
    return f"{z.real:.{precision}g} {z.imag:.{precision}g}"


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from exc


def _load_lowrank(path) -> LowRankOperator:
    """A low-rank operator file: either explicit {"dim", "u", "v"} factors
    or a plain dense matrix to be factored."""
    obj = _load_json(path)
    if isinstance(obj, dict) and "u" in obj and "v" in obj:
        try:
            dim = int(obj["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"low-rank JSON needs an integer dim: {exc}") from exc
        u = matrix_from_obj(obj["u"])
        v = matrix_from_obj(obj["v"])
        return LowRankOperator(dim, u, v)
    if isinstance(obj, dict) and "data" in obj:
        return dense_to_lowrank(matrix_from_obj(obj))
    raise ParseError(
        f"{path} is neither a dense matrix nor a low-rank factor file"
    )


def _load_state(text: str, copies: int) -> ProductState:
    """A product state from a preset name or a JSON file path."""
    if text in PRESETS:
        if text == "single_boson":
            return make_single_boson(copies)
        if text == "psi4":
            return make_pair_superposition(copies)
        # default sea: one filled orbital on two local modes per factor
        return make_fermi_sea(np.eye(2)[:1], copies)
    return product_state_from_obj(_load_json(text))


def _load_counting_spec(path) -> CountingSpec:
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise ParseError("counting spec JSON must be an object")
    try:
        u0 = matrix_from_obj(obj["u0"])
        entries = obj["counted"]
    except KeyError as exc:
        raise ParseError(f"counting spec missing field: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise ParseError("counted must be a nonempty list")
    pairs = []
    for entry in entries:
        try:
            mode = int(entry["mode"])
            re, im = entry["z"]
            pairs.append((mode, complex(float(re), float(im))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad counted entry {entry!r}: {exc}") from exc
    try:
        return CountingSpec(u0, tuple(pairs))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _probs_csv(dist, precision: int) -> str:
    header = ",".join(f"n{m}" for m in dist.modes) + ",probability"
    lines = [header]
    for occ, p in zip(dist.support, dist.probs):
        cells = ",".join(str(n) for n in occ)
        lines.append(f"{cells},{float(p):.{precision}g}")
    return "\n".join(lines)


def cmd_permanent(args) -> int:
    if (args.matrix is None) == (args.lowrank is None):
        raise ParseError("give exactly one of a matrix file or --lowrank FILE")
    if args.lowrank is not None:
        op = _load_lowrank(args.lowrank)
        value = permanent_lowrank(op, backend=args.backend)
    else:
        value = permanent_ryser(load_matrix(args.matrix), backend=args.backend)
    print(_fmt_complex(value, args.precision))
    return 0


def cmd_chi(args) -> int:
    state = _load_state(args.state, args.copies)
    spec = _load_counting_spec(args.spec)
    if args.probs:
        modes = tuple(m for m, _ in spec.counted)
        dist = probabilities(state, spec.u0, modes, backend=args.backend)
        print(_probs_csv(dist, args.precision))
        return 0
    print(_fmt_complex(chi(state, spec, backend=args.backend), args.precision))
    return 0


def cmd_probs(args) -> int:
    state = _load_state(args.state, args.copies)
    spec = _load_counting_spec(args.spec)
    modes = tuple(m for m, _ in spec.counted)
    dist = probabilities(state, spec.u0, modes, backend=args.backend)
    print(_probs_csv(dist, args.precision))
    return 0


def cmd_expand_state(args) -> int:
    state = _load_state(args.state, args.copies)
    vec = state.expand(max_total=args.max_total)
    obj = fock_vector_to_obj(vec)
    header = ",".join(f"n{m}" for m in range(vec.modes)) + ",re,im"
    lines = [header]
    for entry in obj["amps"]:
        cells = ",".join(str(n) for n in entry["occ"])
        lines.append(
            f"{cells},{entry['re']:.{args.precision}g},"
            f"{entry['im']:.{args.precision}g}"
        )
    print("\n".join(lines))
    return 0


def cmd_oracle_compare(args) -> int:
    report = compare_mod.run_family(
        args.family,
        max_size=args.max_size,
        seed=args.seed,
        per_case=args.per_case,
        backend=args.backend,
    )
    verdict = "PASS" if report.ok else "FAIL"
    print(
        f"family={report.family} instances={len(report.rows)} "
        f"max_rel_err={report.max_rel_err:.3e} tol={report.tol:.1e} {verdict}"
    )
    if not report.ok:
        for row in report.rows:
            if row.rel_err > report.tol:
                print(f"  {row.label}: rel_err={row.rel_err:.3e}", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    sizes = None
    if args.sizes:
        try:
            sizes = tuple(int(s) for s in args.sizes.split(","))
        except ValueError:
            raise ParseError(f"bad size list {args.sizes!r}") from None
    records = bench_mod.run_bench(
        args.algorithm,
        sizes=sizes,
        k=args.k,
        repetitions=args.reps,
        seed=args.seed,
        backend=args.backend,
    )
    text = bench_mod.records_to_csv(records)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    slope = bench_mod.fit_loglog_slope(records)
    print(f"loglog_slope={slope:.4f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcskit",
        description="Exact expectation values of non-interacting operators "
        "in product states, with counting statistics.",
    )
    parser.add_argument(
        "--precision", type=int, default=17,
        help="significant digits for printed values (default 17)",
    )
    parser.add_argument(
        "--deterministic", type=_bool_flag, default=True,
        help="require reproducible output (default true; the implementation "
        "is deterministic either way)",
    )
    parser.add_argument(
        "--backend", choices=("auto", "compiled", "python"), default=None,
        help="kernel backend (default: compiled when available)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("permanent", help="permanent of a matrix file, or of "
                       "1+V for a low-rank V")
    p.add_argument("matrix", nargs="?", help="dense matrix JSON file")
    p.add_argument("--lowrank", metavar="FILE",
                   help="low-rank V file; computes Per(1+V) in polynomial time")
    p.set_defaults(func=cmd_permanent)

    common_state = argparse.ArgumentParser(add_help=False)
    common_state.add_argument(
        "state",
        help=f"product-state JSON file or preset name {PRESETS}",
    )
    common_state.add_argument(
        "--copies", type=int, default=1,
        help="factor count for preset states (default 1)",
    )

    p = sub.add_parser("chi", parents=[common_state],
                       help="counting generating function in a product state")
    p.add_argument("spec", help="counting-spec JSON file (u0 and counted modes)")
    p.add_argument("--probs", action="store_true",
                   help="emit the full occupation distribution as CSV instead")
    p.set_defaults(func=cmd_chi)

    p = sub.add_parser("probs", parents=[common_state],
                       help="occupation probabilities of the counted modes")
    p.add_argument("spec", help="counting-spec JSON file (z values ignored)")
    p.set_defaults(func=cmd_probs)

    p = sub.add_parser("expand-state", parents=[common_state],
                       help="expand a product state into Fock amplitudes (CSV)")
    p.add_argument("--max-total", type=int, default=None,
                   help="drop configurations above this particle number")
    p.set_defaults(func=cmd_expand_state)

    p = sub.add_parser("oracle-compare",
                       help="fast path versus brute-force oracle on seeded "
                       "random instances")
    p.add_argument("--family", required=True,
                   choices=sorted(compare_mod.FAMILY_TOLS))
    p.add_argument("--max-size", type=int, default=None)
    p.add_argument("--per-case", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("bench", help="wall-time scaling sweep, CSV output")
    p.add_argument("--algorithm", required=True,
                   choices=sorted(bench_mod.DEFAULT_SIZES))
    p.add_argument("--sizes", help="comma-separated size list")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--reps", type=int, default=bench_mod.MIN_REPETITIONS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", metavar="FILE", help="write CSV here instead "
                   "of stdout (slope still goes to stderr)")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_threads_env()
        return args.func(args)
    except (ParseError, DimensionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GuardExceededError as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return 3
    except UnsupportedStateError as exc:
        print(f"unsupported state: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 5
    except FcskitError as exc:  # base-class fallback, should not be reached
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
