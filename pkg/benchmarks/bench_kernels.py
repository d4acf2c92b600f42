"""Time the compiled statistic kernels against the NumPy reference.

Both implementations are imported side by side, so the comparison runs in one
process regardless of which backend the package selected at import time.

    python3 benchmarks/bench_kernels.py --rows 200 --m 1000 --repeats 5
"""

import argparse
import time

import numpy as np

from simpac import rwset
from simpac.kernels import STAT_KINDS, _ref

try:
    from simpac.kernels import _fast
except ImportError:
    _fast = None


def _best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=200, help="samples per batch")
    ap.add_argument("--m", type=int, default=1000, help="sample size")
    ap.add_argument("--repeats", type=int, default=5, help="timing repeats, best is kept")
    args = ap.parse_args(argv)

    gen = np.random.Generator(np.random.Philox(0))
    u = np.sort(gen.random((args.rows, args.m)), axis=1)
    fam = rwset.uniform_family(args.m)
    fn = (fam.k - fam.j) / args.m
    penalty = np.sqrt(rwset.interval_penalty(fn))

    cases = [(f"band[{name}]", lambda impl, kind=kind: impl.band_statistics(u, kind, 1.5, 0))
             for name, kind in sorted(STAT_KINDS.items())]
    cases.append(
        ("intervals", lambda impl: impl.rw_statistics(u, fam.j, fam.k, fn, penalty))
    )

    print(f"rows={args.rows} m={args.m} intervals={fam.j.size} best of {args.repeats}")
    header = f"{'kernel':<14} {'numpy (s)':>10} {'compiled (s)':>13} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call in cases:
        t_ref = _best_of(lambda: call(_ref), args.repeats)
        if _fast is None:
            print(f"{name:<14} {t_ref:>10.4f} {'n/a':>13} {'n/a':>8}")
            continue
        t_fast = _best_of(lambda: call(_fast), args.repeats)
        np.testing.assert_allclose(call(_ref), call(_fast), rtol=1e-12, atol=1e-12)
        print(f"{name:<14} {t_ref:>10.4f} {t_fast:>13.4f} {t_ref / t_fast:>7.1f}x")
    if _fast is None:
        print("compiled extension not built; only the reference backend was timed")


if __name__ == "__main__":
    main()
