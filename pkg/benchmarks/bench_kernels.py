"""Compare the compiled and numpy box-variance kernels.

    python benchmarks/bench_kernels.py --n 1048576 --repeat 3

Times the full 30-scale sweep for DFA-1, DFA-2 and DMA (theta 0, 0.5) on one
fGn series per backend, checks that both backends agree, and prints a table.
"""
import argparse
import json
import time

import numpy as np

from intertrade import kernels
from intertrade.scaling import box_variance_sweep, build_profile, default_scales
from intertrade.synth import gen_fgn

CASES = [("dfa", 1, 0.0), ("dfa", 2, 0.0), ("dma", 1, 0.0), ("dma", 1, 0.5)]


def sweep_time(profile, method, order, theta, repeat):
    scales = default_scales(profile.n, method)
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = box_variance_sweep(profile, scales, method, order, theta)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1 << 20, help="series length (power of two)")
    ap.add_argument("--repeat", type=int, default=3, help="best-of repetitions")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)

    profile = build_profile(gen_fgn(0.7, args.n, args.seed))
    backends = kernels.available()
    rows = []
    prev = kernels.backend_name()
    try:
        for method, order, theta in CASES:
            label = f"DFA-{order}" if method == "dfa" else f"DMA(theta={theta:g})"
            times, outs = {}, {}
            for b in backends:
                kernels.set_backend(b)
                times[b], outs[b] = sweep_time(profile, method, order, theta, args.repeat)
            ref = outs[backends[-1]]
            err = max(float(np.max(np.abs(a - r) / np.maximum(np.abs(r), 1e-300)))
                      for o in outs.values() for a, r in zip(o, ref))
            rows.append({"case": label, **{f"{b}_s": round(t, 4) for b, t in times.items()},
                         "max_rel_diff": err})
    finally:
        kernels.set_backend(prev)

    if args.json:
        print(json.dumps({"n": args.n, "rows": rows}, indent=2))
        return
    print(f"N = {args.n}, 30 scales, best of {args.repeat}")
    head = ["case"] + [f"{b} [s]" for b in backends] + ["speedup", "max rel diff"]
    print("  ".join(f"{h:>14}" for h in head))
    for r in rows:
        t = [r[f"{b}_s"] for b in backends]
        speed = t[-1] / t[0] if len(t) > 1 and t[0] > 0 else 1.0
        print("  ".join(f"{v:>14}" for v in [r["case"], *t, f"{speed:.2f}x", f"{r['max_rel_diff']:.1e}"]))


if __name__ == "__main__":
    main()
