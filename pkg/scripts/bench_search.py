#!/usr/bin/env python3
"""Search latency benchmark over mock-embedded indexes of increasing size."""

import argparse
import random
import statistics
import time

import numpy as np

from courseqa.index import VectorIndex, search
from courseqa.providers import MOCK_DIM, ProviderConfig, embed


def build(n: int, rng: random.Random) -> VectorIndex:
    vocab = [f"term{i}" for i in range(500)]
    texts = [" ".join(rng.choice(vocab) for _ in range(12)) for _ in range(n)]
    vectors = embed(texts, ProviderConfig(kind="mock"))
    return VectorIndex(
        dim=MOCK_DIM,
        chunk_ids=[f"ch{i:06d}#0" for i in range(n)],
        matrix=np.array([v.values for v in vectors], dtype=np.float32),
        kb_digest="bench",
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 50_000])
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    query_vecs = embed(
        [" ".join(f"term{rng.randint(0, 499)}" for _ in range(5)) for _ in range(args.queries)],
        ProviderConfig(kind="mock"),
    )
    print(f"{'entries':>10} {'p50 us':>10} {'p99 us':>10} {'qps':>12}")
    for n in args.sizes:
        idx = build(n, rng)
        laps = []
        for q in query_vecs:
            t0 = time.perf_counter()
            search(idx, q, k=args.k)
            laps.append(time.perf_counter() - t0)
        p50 = statistics.median(laps) * 1e6
        p99 = sorted(laps)[int(0.99 * (len(laps) - 1))] * 1e6
        qps = 1 / statistics.mean(laps)
        print(f"{n:>10} {p50:>10.1f} {p99:>10.1f} {qps:>12.0f}")


if __name__ == "__main__":
    main()
