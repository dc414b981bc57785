"""Compiled vs pure-Python kernels: per-call throughput and agreement.

    python3 benchmarks/bench_kernels.py [--size 20000] [--repeat 3]

Also times one end-to-end Student-r uncertainty sum under each backend, in
a fresh interpreter so the import-time backend choice takes effect.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ueplab import _pykernels

try:
    from ueplab import _ckernels
except ImportError:
    _ckernels = None

END_TO_END = (
    "import time; from ueplab.radial import EllipticalLaw; "
    "from ueplab.entropy import usum; t = time.perf_counter(); "
    "[usum(EllipticalLaw.student_r(n, n + 2), 1.5) for n in (2, 8, 32)]; "
    "print(time.perf_counter() - t)"
)


def cases(size, rng):
    x = np.ascontiguousarray(rng.uniform(0.01, 60.0, size))
    small = np.ascontiguousarray(rng.uniform(0.01, 5.0, size))
    return [
        ("log_gamma", lambda k: k.log_gamma(x)),
        ("digamma", lambda k: k.digamma(x)),
        ("log_abs_bessel_j nu=2.5", lambda k: k.log_abs_bessel_j(2.5, x)),
        ("bessel_j nu=0", lambda k: k.bessel_j(0.0, x)),
        ("log_bessel_k_scaled nu=1.5", lambda k: k.log_bessel_k_scaled(1.5, small)),
    ]


def _first(result):
    return result[0] if isinstance(result, tuple) else result


def end_to_end(pure):
    env = dict(os.environ, UEPLAB_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _ckernels is None:
        print("compiled kernels not built; only the pure-Python times are shown")
    print(f"{'kernel':<28}{'python ms':>12}{'compiled ms':>13}{'speedup':>9}"
          f"{'max rel diff':>14}")
    for name, call in cases(args.size, rng):
        t_py = min(timeit.repeat(lambda: call(_pykernels), number=1,
                                 repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<28}{t_py:>12.1f}")
            continue
        t_c = min(timeit.repeat(lambda: call(_ckernels), number=1,
                                repeat=args.repeat)) * 1e3
        a, b = _first(call(_pykernels)), _first(call(_ckernels))
        diff = np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))
        print(f"{name:<28}{t_py:>12.1f}{t_c:>13.2f}{t_py / t_c:>9.1f}{diff:>14.2e}")
    print()
    t_py = end_to_end(pure=True)
    line = f"usum Student-r n=2,8,32   python {t_py:.2f} s"
    if _ckernels is not None:
        t_c = end_to_end(pure=False)
        line += f"   compiled {t_c:.2f} s   speedup {t_py / t_c:.1f}"
    print(line)


if __name__ == "__main__":
    main()
