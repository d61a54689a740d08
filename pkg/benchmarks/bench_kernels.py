"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--size 3000] [--iters 20] [--repeat 3]

Each row reports the best of ``--repeat`` runs for both backends and the speedup.
"""

import argparse
import random
import time

import numpy as np

from surfgen import _kernels_py, kernels
from surfgen.nlg2 import train_nlg2
from surfgen.nlg3 import train_nlg3
from surfgen.synth import SynthGrammar, synth_corpus

try:
    from surfgen import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def random_csr(rng, n_hist, n_out, n_feat, max_pairs):
    hist_ptr, pair_out, pair_fid, ev_ptr, ev_out, ev_count, weight = [0], [], [], [0], [], [], []
    for _ in range(n_hist):
        pairs = {(rng.randrange(n_out), rng.randrange(n_feat)) for _ in range(rng.randint(1, max_pairs))}
        for o, f in sorted(pairs):
            pair_out.append(o)
            pair_fid.append(f)
        hist_ptr.append(len(pair_out))
        total = 0
        for o in sorted(rng.sample(range(n_out), rng.randint(1, 3))):
            c = rng.randint(1, 4)
            ev_out.append(o)
            ev_count.append(float(c))
            total += c
        ev_ptr.append(len(ev_out))
        weight.append(float(total))
    fsharp = max(np.bincount(pair_out[a:b], minlength=n_out).max()
                 for a, b in zip(hist_ptr, hist_ptr[1:]))
    return dict(
        hist_ptr=np.array(hist_ptr, dtype=np.int64), pair_out=np.array(pair_out, dtype=np.int32),
        pair_fid=np.array(pair_fid, dtype=np.int32), hist_weight=np.array(weight),
        ev_ptr=np.array(ev_ptr, dtype=np.int64), ev_out=np.array(ev_out, dtype=np.int32),
        ev_count=np.array(ev_count), log_w=np.array([rng.uniform(-3, 3) for _ in range(n_feat)]),
        n_out=n_out, max_fsharp=int(fsharp), lo=0, hi=n_hist,
    )


def use_backend(impl):
    kernels.log_softmax_scores = impl.log_softmax_scores
    kernels.iis_expectations = impl.iis_expectations


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=3000, help="synthetic training templates")
    ap.add_argument("--iters", type=int, default=20, help="IIS iterations per training run")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if compiled is None:
        ap.exit(1, "compiled kernels not built; run: pip install -e . --no-build-isolation\n")

    rng = random.Random(args.seed)
    csr = random_csr(rng, n_hist=20000, n_out=300, n_feat=5000, max_pairs=40)
    k = 40
    outs = np.array([rng.randrange(300) for _ in range(k)], dtype=np.int32)
    fids = np.array([rng.randrange(5000) for _ in range(k)], dtype=np.int32)
    calls = 20000

    data = synth_corpus(SynthGrammar.default(), args.seed, args.size)
    cases = [
        (f"log_softmax_scores x{calls}",
         lambda impl: [impl.log_softmax_scores(outs, fids, csr["log_w"], 300) for _ in range(calls)]),
        ("iis_expectations 20000 contexts", lambda impl: impl.iis_expectations(**csr)),
        (f"train nlg2, {args.iters} iters", lambda impl: train_nlg2(data.train, max_iters=args.iters)),
        (f"train nlg3, {args.iters} iters", lambda impl: train_nlg3(data.treebank, max_iters=args.iters)),
    ]
    original = (kernels.log_softmax_scores, kernels.iis_expectations)
    print(f"{'case':36s} {'cython s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    try:
        for name, fn in cases:
            row = []
            for impl in (compiled, _kernels_py):
                use_backend(impl)
                row.append(best_of(lambda: fn(impl), args.repeat))
            print(f"{name:36s} {row[0]:10.3f} {row[1]:10.3f} {row[1] / row[0]:7.1f}x")
    finally:
        kernels.log_softmax_scores, kernels.iis_expectations = original
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
