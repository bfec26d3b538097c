"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N wall time per call for each kernel and backend and
the speed-up of the compiled one.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from sinest import _fallback
from sinest.likelihood import _grid_tables

try:
    from sinest import _core
except ImportError:  # extension not built
    _core = None


def _cases(rng):
    x1 = np.ascontiguousarray((rng.standard_normal(25) + 1j * rng.standard_normal(25))[:, None])
    xk = np.ascontiguousarray(rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10)))
    f3 = np.array([0.2, 0.35, 0.5])
    xn = float(np.vdot(x1, x1).real)
    g2 = _grid_tables(x1, 500)
    g3 = _grid_tables(x1, 100)
    return [
        ("cost_grad p=3 N=25", lambda m: m.cost_grad(x1, f3, True), 2000),
        ("cost_grad p=2 10x10 snapshots", lambda m: m.cost_grad(xk, f3[:2], True), 2000),
        ("grid_search p=2 G=500", lambda m: m.grid_search(*g2, 25, 2, xn, 25e-9), 3),
        ("grid_search p=3 G=100", lambda m: m.grid_search(*g3, 25, 3, xn, 25e-9), 3),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = [("python", _fallback)] + ([("compiled", _core)] if _core is not None else [])
    print(f"{'kernel':32s}" + "".join(f"{name:>14s}" for name, _ in backends) + "   speed-up")
    for label, call, number in _cases(np.random.default_rng(0)):
        times = []
        for _, mod in backends:
            n = number if mod is not _fallback else max(1, number // 10)
            best = min(timeit.repeat(lambda: call(mod), number=n, repeat=args.repeat)) / n
            times.append(best)
        row = f"{label:32s}" + "".join(f"{t * 1e6:12.1f}us" for t in times)
        if len(times) == 2:
            row += f"   {times[0] / times[1]:8.1f}x"
        print(row)
    if _core is None:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
