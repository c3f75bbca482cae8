"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best wall time of each backend and
whether the two agree on the result.
"""
import argparse
import timeit

import numpy as np

from loadagg import _kernels
from loadagg.models.svr import rbf_kernel


def apen_case(rng):
    x = np.ascontiguousarray(np.cumsum(rng.normal(size=2400)))
    return (x, 2, 0.2 * float(x.std())), lambda r: (r[0], r[1])


def splits_case(rng):
    n, f = 3000, 48
    xt = np.ascontiguousarray(rng.normal(size=(f, n)))
    order = np.ascontiguousarray(np.argsort(xt, axis=1, kind="stable").astype(np.intp))
    resid = rng.normal(size=n)
    node_of = np.zeros(n, dtype=np.intp)
    args = (xt, order, node_of, resid, np.array([resid.sum()]), np.array([n], dtype=np.intp), 1)
    return args, lambda r: (r[1], r[2])


def smo_case(rng):
    x = np.linspace(0, 6, 400)[:, None]
    k = np.ascontiguousarray(rbf_kernel(x, x, 1.0))
    y = np.ascontiguousarray(np.sin(x[:, 0]) + 0.05 * rng.normal(size=400))
    return (k, y, 10.0, 0.05, 1e-3, 200_000), lambda r: (r[0],)


CASES = {"apen_counts": apen_case, "level_splits": splits_case, "smo": smo_case}


def agree(a, b) -> bool:
    return all(np.allclose(x, y, atol=1e-8) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels.compiled is None:
        print("compiled extension not built; only the numpy backend is available")
    print(f"{'kernel':<14}{'numpy s':>10}{'cython s':>10}{'speedup':>9}  agree")
    for name, make in CASES.items():
        case_args, key = make(np.random.default_rng(0))
        pure_fn = getattr(_kernels.pure, name)
        t_pure = min(timeit.repeat(lambda: pure_fn(*case_args), number=1, repeat=args.repeat))
        if _kernels.compiled is None:
            print(f"{name:<14}{t_pure:>10.4f}{'-':>10}{'-':>9}  -")
            continue
        comp_fn = getattr(_kernels.compiled, name)
        t_comp = min(timeit.repeat(lambda: comp_fn(*case_args), number=1, repeat=args.repeat))
        same = agree(key(pure_fn(*case_args)), key(comp_fn(*case_args)))
        print(f"{name:<14}{t_pure:>10.4f}{t_comp:>10.4f}{t_pure / t_comp:>8.1f}x  {same}")


if __name__ == "__main__":
    main()
