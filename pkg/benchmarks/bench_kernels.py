"""Compare the compiled scoring kernels against the pure-Python fallback.

The measured loop is the one the live service runs on every SERP: hash each
document's tokens into a TF vector, then cosine it against every subtopic
vector. Run from the repository root:

    python3 benchmarks/bench_kernels.py --docs 400 --subtopics 18
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from searchscaffold.kernels import backend_module


def make_corpus(rng: random.Random, docs: int, vocab_size: int):
    vocab = [f"term{i:04d}" for i in range(vocab_size)]
    return [
        [rng.choice(vocab) for _ in range(rng.randint(30, 400))]
        for _ in range(docs)
    ]


def embed_all(backend, token_lists, dim: int):
    out = []
    for tokens in token_lists:
        vec = np.zeros(dim, dtype=np.float64)
        backend.accumulate_tf(tokens, vec)
        out.append(vec)
    return out


def serp_sweep(backend, doc_vecs, sub_vecs) -> float:
    total = 0.0
    for dv in doc_vecs:
        for sv in sub_vecs:
            total += backend.cosine(dv, sv)
    return total


def bench(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=400)
    parser.add_argument("--subtopics", type=int, default=18)
    parser.add_argument("--dim", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    corpus = make_corpus(rng, args.docs, vocab_size=3000)
    sub_texts = make_corpus(rng, args.subtopics, vocab_size=3000)

    backends = {}
    for name in ("py", "c"):
        try:
            backends[name] = backend_module(name)
        except ImportError:
            print(f"[{name}] backend unavailable, skipping")
    if "py" not in backends:
        raise SystemExit("pure-Python backend must always be importable")

    # identical outputs before timing anything
    reference = embed_all(backends["py"], corpus[:20], args.dim)
    for name, backend in backends.items():
        vecs = embed_all(backend, corpus[:20], args.dim)
        for r, v in zip(reference, vecs):
            np.testing.assert_allclose(v, r, atol=0)

    timings: dict[str, dict[str, float]] = {}
    for name, backend in backends.items():
        doc_vecs = embed_all(backend, corpus, args.dim)
        sub_vecs = embed_all(backend, sub_texts, args.dim)
        timings[name] = {
            "hash": bench(lambda b=backend: embed_all(b, corpus, args.dim), args.repeats),
            "cosine": bench(lambda b=backend: serp_sweep(b, doc_vecs, sub_vecs), args.repeats),
        }

    width = max(len(k) for v in timings.values() for k in v)
    print(f"{args.docs} docs x {args.subtopics} subtopics, dim={args.dim}, best of {args.repeats}")
    for op in ("hash", "cosine"):
        row = [f"{op:<{width}}"]
        for name in ("py", "c"):
            if name in timings:
                row.append(f"{name}: {timings[name][op] * 1000:8.2f} ms")
        if "py" in timings and "c" in timings:
            row.append(f"speedup: {timings['py'][op] / timings['c'][op]:5.1f}x")
        print("  " + "   ".join(row))


if __name__ == "__main__":
    main()
