"""Near-deduplication with MinHash and locality-sensitive hashing.

Shingles are width-5 windows over lowercased whitespace tokens. Signatures
use 256 universal-hash permutations; LSH banding proposes candidate pairs,
which are then verified against exact shingle-set Jaccard before grouping.
Each duplicate group keeps its lexicographically smallest seed_id.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..records import SeedFunction

_U64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass
class DedupParams:
    threshold: float = 0.5
    num_perm: int = 256
    shingle_width: int = 5
    bands: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.num_perm % self.bands != 0:
            raise ValueError("num_perm must be divisible by bands")

    @property
    def rows_per_band(self) -> int:
        return self.num_perm // self.bands


def shingle_set(text: str, width: int = 5) -> frozenset[int]:
    """Hashed width-token shingles of the lowercased, whitespace-split text."""
    tokens = text.lower().split()
    if not tokens:
        return frozenset()
    if len(tokens) < width:
        windows = [tuple(tokens)]
    else:
        windows = [tuple(tokens[i:i + width])
                   for i in range(len(tokens) - width + 1)]
    out = set()
    for w in windows:
        digest = hashlib.blake2b(" ".join(w).encode("utf-8"), digest_size=4).digest()
        out.add(int.from_bytes(digest, "big"))
    return frozenset(out)


def exact_jaccard(a: frozenset[int], b: frozenset[int]) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


class MinHasher:
    """Multiply-shift permutations: h -> a*h + b over the full uint64 ring.

    Odd 64-bit multipliers make the wraparound mix every bit, so the min
    over a shingle set behaves like a random permutation's min. (A smaller
    multiplier range would leave the low-valued shingles un-wrapped and the
    "permutations" nearly identical.)
    """

    def __init__(self, params: DedupParams):
        rng = np.random.default_rng(params.seed)
        self.a = rng.integers(0, 1 << 63, size=params.num_perm,
                              dtype=np.uint64) * np.uint64(2) + np.uint64(1)
        self.b = rng.integers(0, _U64_MAX, size=params.num_perm,
                              dtype=np.uint64)
        self.params = params

    def signature(self, shingles: frozenset[int]) -> np.ndarray:
        if not shingles:
            return np.full(self.params.num_perm, _U64_MAX, dtype=np.uint64)
        h = np.fromiter(shingles, dtype=np.uint64, count=len(shingles))
        with np.errstate(over="ignore"):
            prod = h[:, None] * self.a + self.b
        return prod.min(axis=0)


class _UnionFind:
    def __init__(self, keys):
        self.parent = {k: k for k in keys}

    def find(self, k):
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic: smaller id becomes the root
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass
class DedupStats:
    group_count: int = 0
    max_group_size: int = 0
    candidate_pairs: int = 0
    verified_pairs: int = 0


def duplicate_groups(fns: list[SeedFunction],
                     params: DedupParams) -> tuple[dict[str, list[str]], DedupStats]:
    """Group seed ids by near-duplicate similarity (transitively closed)."""
    shingles = {fn.seed_id: shingle_set(fn.rendered, params.shingle_width)
                for fn in fns}
    hasher = MinHasher(params)
    sigs = {sid: hasher.signature(sh) for sid, sh in shingles.items()}

    r = params.rows_per_band
    buckets: dict[tuple[int, bytes], list[str]] = {}
    for fn in fns:
        sig = sigs[fn.seed_id]
        for band in range(params.bands):
            key = (band, sig[band * r:(band + 1) * r].tobytes())
            buckets.setdefault(key, []).append(fn.seed_id)

    uf = _UnionFind([fn.seed_id for fn in fns])
    stats = DedupStats()
    seen_pairs: set[tuple[str, str]] = set()
    for ids in buckets.values():
        if len(ids) < 2:
            continue
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                pair = (min(ids[i], ids[j]), max(ids[i], ids[j]))
                if pair in seen_pairs:
                    continue
                seen_pairs.add(pair)
                stats.candidate_pairs += 1
                if exact_jaccard(shingles[pair[0]], shingles[pair[1]]) >= params.threshold:
                    stats.verified_pairs += 1
                    uf.union(*pair)

    groups: dict[str, list[str]] = {}
    for fn in fns:
        groups.setdefault(uf.find(fn.seed_id), []).append(fn.seed_id)
    stats.group_count = len(groups)
    stats.max_group_size = max((len(v) for v in groups.values()), default=0)
    return groups, stats


def near_dedup(fns: list[SeedFunction],
               params: DedupParams | None = None) -> list[SeedFunction]:
    """Keep one representative (lowest seed_id) per duplicate group,
    preserving input order of the kept representatives."""
    kept, _ = near_dedup_with_stats(fns, params)
    return kept


def near_dedup_with_stats(fns: list[SeedFunction],
                          params: DedupParams | None = None
                          ) -> tuple[list[SeedFunction], DedupStats]:
    params = params or DedupParams()
    groups, stats = duplicate_groups(fns, params)
    representatives = {min(members) for members in groups.values()}
    return [fn for fn in fns if fn.seed_id in representatives], stats
