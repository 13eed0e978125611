"""Time the numba kernels against the scipy/numpy fallback.

    python3 benchmarks/bench_kernels.py [--entities 15000] [--triples 100000]

Covers the two hot spots of a decode: one propagation SpMM and the fused
triple-slice product that assembles the output features.
"""

import argparse
import time

import numpy as np

from tfpdecode import _kernels, build_views, generate_kg
from tfpdecode.decoder import build_triple_slices, final_features, triple_features
from tfpdecode.sparse import spmm


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--entities", type=int, default=15000)
    p.add_argument("--relations", type=int, default=1000)
    p.add_argument("--triples", type=int, default=100000)
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--dr", type=int, default=512)
    p.add_argument("--de", type=int, default=16)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args()

    rng = np.random.default_rng(0)
    kg = generate_kg(args.entities, args.relations, args.triples, 0)
    views = build_views(kg, np.float32)
    x = rng.standard_normal((kg.n_entities, args.dim)).astype(np.float32)
    x_r = rng.standard_normal((kg.n_relations, args.dr)).astype(np.float32)
    tensor = build_triple_slices(kg, triple_features(x_r, views.tri_rel))
    x_e = rng.standard_normal((kg.n_entities, args.de)).astype(np.float32)

    cases = {
        "propagation spmm": lambda: spmm(views.integral, x),
        "triple-slice product": lambda: final_features(tensor, x_e),
    }
    backends = ["numpy"] + (["numba"] if _kernels.HAS_NUMBA else [])
    print(f"{kg.n_entities} entities, {kg.n_triples} triples, d={args.dim}, d_r={args.dr}, d_e={args.de}")
    print(f"{'kernel':<22s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, fn in cases.items():
        row = {}
        for b in backends:
            with _kernels.use_backend(b):
                fn()  # warm-up, includes JIT compilation
                row[b] = best_of(fn, args.repeats)
        speed = f"{row['numpy'] / row['numba']:9.1f}x" if "numba" in row else ""
        print(f"{name:<22s}" + "".join(f"{row[b]:11.3f}s" for b in backends) + speed)


if __name__ == "__main__":
    main()
