"""Time the exact dot-product kernels per backend against plain ``np.dot``.

    python benchmarks/bench_kernels.py [--dims 64,1024,16384] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from gradgate.kernels import available_backends


def best_of(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dims", default="64,1024,16384,262144")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    rng = np.random.Generator(np.random.PCG64(0))
    print(f"{'dim':>8} {'kernel':>12} {'backend':>8} {'time':>12} {'vs np.dot':>10}")
    for dim in (int(d) for d in args.dims.split(",")):
        a, b = rng.standard_normal(dim), rng.standard_normal(dim)
        base = best_of(lambda: np.dot(a, b), args.repeat)
        print(f"{dim:>8} {'np.dot':>12} {'numpy':>8} {base * 1e6:>10.1f}us {1.0:>9.1f}x")
        for name, (dot, terms) in backends.items():
            for label, fn in (("exact_dot", lambda: dot(a, b)), ("angle_terms", lambda: terms(a, b))):
                t = best_of(fn, args.repeat)
                print(f"{dim:>8} {label:>12} {name:>8} {t * 1e6:>10.1f}us {t / base:>9.1f}x")


if __name__ == "__main__":
    main()
