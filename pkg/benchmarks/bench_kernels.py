"""Compare the compiled kernels with the numpy fallback.

Run from the repository root after installing::

    python3 benchmarks/bench_kernels.py [--n 64] [--repeat 5]

Each kernel is timed on the same inputs with both backends, results are
checked for agreement, and the speedup is printed. The last line times a
full right-hand-side evaluation, where the kernels share the budget with FFTs.
"""

from __future__ import annotations

import argparse
import importlib
import os
import subprocess
import sys
import timeit

import numpy as np

from hallmhd import _kernels_py

try:
    from hallmhd import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _inputs(n, rng):
    a = rng.standard_normal((3, n**3))
    b = rng.standard_normal((3, n**3))
    from hallmhd.field_core import Grid
    from hallmhd.littlewood_paley import build_partition

    grid = Grid(n)
    part = build_partition(grid)
    power = rng.random(grid.spectral_shape).ravel()
    return a, b, power, part


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(n, repeat):
    rng = np.random.default_rng(0)
    a, b, power, part = _inputs(n, rng)
    cases = {
        "cross": lambda m: m.cross(a, b),
        "power_sum p=3": lambda m: m.power_sum(a, 3.0),
        "max_magnitude": lambda m: m.max_magnitude(a),
        "shell_energies": lambda m: m.shell_energies(power, part._lo, part._w_lo, part._w_hi, part.nshells),
    }
    print(f"n={n}  (best of {repeat})")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speedup':>10}{'max rel diff':>15}")
    for name, call in cases.items():
        t_py = _best(lambda: call(_kernels_py), repeat)
        r_py = np.asarray(call(_kernels_py))
        if _compiled is None:
            print(f"{name:<16}{1e3 * t_py:>12.2f}{'n/a':>15}")
            continue
        t_c = _best(lambda: call(_compiled), repeat)
        r_c = np.asarray(call(_compiled))
        diff = float(np.max(np.abs(r_c - r_py)) / max(float(np.max(np.abs(r_py))), 1e-300))
        print(f"{name:<16}{1e3 * t_py:>12.2f}{1e3 * t_c:>15.2f}{t_py / t_c:>10.2f}{diff:>15.2e}")


_RHS_SNIPPET = """
import timeit
from hallmhd.experiments.data import make_initial
from hallmhd.field_core import Grid
from hallmhd.dynamics import HallParams, HallState, rhs_original
from hallmhd.kernels import BACKEND
g = Grid({n})
u, b, J = make_initial(g, seed=0, amplitude=0.1)
s = HallState(u, b, J, HallParams(0.1, 0.1, 0.5))
print(BACKEND, min(timeit.repeat(lambda: rhs_original(s), number=1, repeat={repeat})))
"""


def bench_rhs(n, repeat):
    """Time one original-system rhs in fresh processes, one per backend."""
    out = []
    for pure in ("0", "1"):
        env = dict(os.environ, HMHD_PURE_PYTHON=pure)
        res = subprocess.run(
            [sys.executable, "-c", _RHS_SNIPPET.format(n=n, repeat=repeat)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        backend, t = res.stdout.split()
        out.append((backend, float(t)))
    print("rhs_original: " + ", ".join(f"{b} {1e3 * t:.2f} ms" for b, t in out))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    importlib.import_module("hallmhd")
    bench(args.n, args.repeat)
    bench_rhs(min(args.n, 32), args.repeat)


if __name__ == "__main__":
    main()
