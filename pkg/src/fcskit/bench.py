"""Wall-time scaling benchmarks for the polynomial algorithms.

Instances are generated once per size from a seeded generator; every timed
run is preceded by a warmup call and the reported wall time is the median of
at least three repetitions on the monotonic clock, sampling further until a
small time floor is met so that microsecond-scale cases are not dominated by
scheduler noise.  The checksum column pins the computed value so two
benchmark runs can be compared for bit-identical results, not just speed.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from fcskit.compare import random_lowrank
from fcskit.errors import ParseError
from fcskit.fermion import expectation_lowrank
from fcskit.permanent import permanent_lowrank_log, permanent_ryser
from fcskit.rand import generator, orthonormal_rows
from fcskit.states import make_fermi_sea

MIN_REPETITIONS = 3
# sample each size until this much wall time accumulates, so microsecond-scale
# cases are medians over many calls rather than three noisy ones
MIN_SAMPLE_SECONDS = 2e-3
MAX_SAMPLES = 200

DEFAULT_SIZES = {
    "lowrank-permanent": (250, 500, 1000, 2000),
    "fermion-lowrank": (100, 200, 400, 800),
    "ryser": (10, 12, 14, 16, 18, 20),
}

CSV_FIELDS = (
    "algorithm",
    "backend",
    "n",
    "k",
    "wall_time_seconds",
    "repetitions",
    "checksum",
)


@dataclass
class BenchRecord:
    algorithm: str
    backend: str
    n: int
    k: int
    wall_time_seconds: float
    repetitions: int
    checksum: str


def _checksum(parts) -> str:
    return " ".join(f"{float(x):.17g}" for x in parts)


def _make_case(algorithm: str, rng, n: int, k: int, backend):
    """Build one instance and return a zero-argument timed call."""
    if algorithm == "lowrank-permanent":
        op = random_lowrank(rng, n, k)

        def run():
            val = permanent_lowrank_log(op, backend=backend)
            return _checksum((val.log_abs, val.phase.real, val.phase.imag))

    elif algorithm == "fermion-lowrank":
        if n % 2:
            raise ParseError("fermion-lowrank sizes must be even")
        state = make_fermi_sea(orthonormal_rows(rng, 1, 2), n // 2)
        op = random_lowrank(rng, n, k)

        def run():
            val = expectation_lowrank(state, op, backend=backend)
            return _checksum((val.real, val.imag))

    elif algorithm == "ryser":
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        a /= np.sqrt(n)

        def run():
            val = permanent_ryser(a, backend=backend)
            return _checksum((val.real, val.imag))

    else:
        raise ParseError(
            f"unknown algorithm {algorithm!r}; choose from {sorted(DEFAULT_SIZES)}"
        )
    return run


def run_bench(algorithm: str, sizes=None, k: int = 1, repetitions: int = MIN_REPETITIONS,
              seed: int = 0, backend: str | None = None) -> list:
    """Median-of-repetitions timings over a size sweep."""
    if repetitions < MIN_REPETITIONS:
        raise ValueError(f"need at least {MIN_REPETITIONS} repetitions")
    if sizes is None:
        sizes = DEFAULT_SIZES.get(algorithm)
        if sizes is None:
            raise ParseError(
                f"unknown algorithm {algorithm!r}; choose from {sorted(DEFAULT_SIZES)}"
            )
    backend_name = backend or "auto"
    records = []
    for n in sizes:
        rng = generator(seed + n)
        run = _make_case(algorithm, rng, int(n), int(k), backend)
        checksum = run()  # warmup, and pins the value
        times = []
        spent = 0.0
        while len(times) < repetitions or (
            spent < MIN_SAMPLE_SECONDS and len(times) < MAX_SAMPLES
        ):
            t0 = time.perf_counter()
            again = run()
            dt = time.perf_counter() - t0
            if again != checksum:
                raise RuntimeError(
                    f"nondeterministic result at n={n}: {again} != {checksum}"
                )
            times.append(dt)
            spent += dt
        records.append(
            BenchRecord(
                algorithm=algorithm,
                backend=backend_name,
                n=int(n),
                k=int(k),
                wall_time_seconds=float(np.median(times)),
                repetitions=len(times),
                checksum=checksum,
            )
        )
    return records


def fit_loglog_slope(records) -> float:
    """Least-squares slope of log(time) against log(n)."""
    ns = np.array([r.n for r in records], dtype=float)
    ts = np.array([r.wall_time_seconds for r in records], dtype=float)
    if ns.size < 2:
        raise ValueError("need at least two sizes to fit a slope")
    if np.any(ts <= 0):
        raise ValueError("nonpositive timings cannot be fit on a log scale")
    slope, _ = np.polyfit(np.log(ns), np.log(ts), 1)
    return float(slope)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        row = {f: getattr(r, f) for f in CSV_FIELDS}
        row["wall_time_seconds"] = f"{r.wall_time_seconds:.6e}"
        writer.writerow(row)
    return buf.getvalue()
