"""Small shared helpers: deterministic parallel map, canonical JSON, digests."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor


def map_indexed(fn, count: int, threads: int = 1) -> list:
    """Evaluate fn(i) for i in range(count), returning results in index order.

    With threads > 1 the calls run on a thread pool; results are gathered by
    index, so the output is identical to the sequential run. Callers must make
    fn(i) independent of evaluation order (disjoint RNG substreams).
    """
    if count <= 0:
        return []
    if threads <= 1 or count == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def canonical_json(obj) -> str:
    """Serialize with sorted keys and no whitespace; floats keep full precision."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
