"""Independent brute-force oracles used to freeze expected test values.

These deliberately share no code with the package: subsets are raw
bitmasks, colorings are plain integers, and the scans enumerate the full
coloring space with no symmetry pruning.  The heavy scans are run once and
their outputs recorded under tests/data/.
"""

from __future__ import annotations

import math
from itertools import combinations, product

import numpy as np


def _block_pair_triples(n: int) -> list[tuple[int, int, int]]:
    """All (B1, B2, B1|B2) with max(B1) < min(B2), as bit indexes into a
    coloring integer; subset with mask m has bit index m-1."""
    triples = []
    for b1 in range(1, 1 << n):
        hi = b1.bit_length()  # position of max element of B1 (1-based)
        for b2 in range(1, 1 << n):
            if b2 and (b2 & -b2).bit_length() > hi:
                triples.append((b1 - 1, b2 - 1, (b1 | b2) - 1))
    return triples


def mt_pair_scan(n: int, chunk_bits: int = 22) -> tuple[int, int | None]:
    """Full scan of all 2-colorings of nonempty subsets of [n] against all
    block pairs (m = 2, r = 2): returns (number of colorings with no
    monochromatic triple, least such coloring code or None)."""
    triples = _block_pair_triples(n)
    bits = (1 << n) - 1
    total = 1 << bits
    chunk = 1 << min(chunk_bits, bits)
    bad_count = 0
    least: int | None = None
    for start in range(0, total, chunk):
        x = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        for i1, i2, iu in triples:
            if x.size == 0:
                break
            b1 = (x >> np.uint64(i1)) & np.uint64(1)
            b2 = (x >> np.uint64(i2)) & np.uint64(1)
            bu = (x >> np.uint64(iu)) & np.uint64(1)
            x = x[((b1 ^ b2) | (b2 ^ bu)) != 0]
        if x.size:
            bad_count += int(x.size)
            if least is None:
                least = int(x[0])
    return bad_count, least


def mt_min_bruteforce(n_max: int = 6) -> dict:
    """Minimal n for the m = 2, r = 2 block-union statement by double
    enumeration, with the per-n scan outcomes."""
    out: dict = {"per_n": {}}
    for n in range(2, n_max + 1):
        bad, least = mt_pair_scan(n)
        out["per_n"][n] = {"bad_colorings": bad, "least_bad": least}
        if bad == 0:
            out["value"] = n
            return out
    out["value"] = None
    return out


def ramsey_scan(N: int, k: int = 2, l: int = 3, r: int = 2) -> int:
    """Number of r-colorings of k-subsets of [N] with no monochromatic
    l-set, by full enumeration (r = 2 only)."""
    assert r == 2
    edges = list(combinations(range(N), k))
    index = {e: i for i, e in enumerate(edges)}
    witness_bits = []
    for X in combinations(range(N), l):
        witness_bits.append([index[e] for e in combinations(X, k)])
    bad = 0
    for code in range(1 << len(edges)):
        ok = False
        for wb in witness_bits:
            colors = {code >> b & 1 for b in wb}
            if len(colors) == 1:
                ok = True
                break
        if not ok:
            bad += 1
    return bad


def ramsey_min_bruteforce(k: int = 2, l: int = 3, r: int = 2, N_max: int = 7) -> int:
    for N in range(k, N_max + 1):
        if ramsey_scan(N, k, l, r) == 0:
            return N
    raise AssertionError("not found in range")


def chain_epi_count(N: int, l: int) -> int:
    """Epimorphism count between single-branch fans by the step-position
    bijection."""
    return math.comb(N, l)


def brute_vertex_epimorphisms(B_h: int, B_w: int, A_h: int, A_w: int) -> set:
    """All epimorphisms between ordered fans by backtracking over vertex
    assignments: R-edge preservation pruned during assignment, surjectivity
    and both relations' witness conditions checked at the leaves.

    Vertices: 0 is the root, branch j level i is coded (j, i).  Returns
    frozensets of (source vertex, target vertex) pairs.
    """

    ROOT = (0, 0)

    def vertices(h, w):
        out = [ROOT]
        for j in range(1, w + 1):
            for i in range(1, h + 1):
                out.append((j, i))
        return out

    def r_pairs(h, w):
        pairs = {(v, v) for v in vertices(h, w)}
        for j in range(1, w + 1):
            prev = ROOT
            for i in range(1, h + 1):
                pairs.add((prev, (j, i)))
                prev = (j, i)
        return pairs

    def s_pairs(h, w):
        # root belongs to every branch, so it relates both ways
        pairs = set()
        verts = vertices(h, w)
        for x in verts:
            for y in verts:
                if x == ROOT or y == ROOT or x[0] <= y[0]:
                    pairs.add((x, y))
        return pairs

    src = vertices(B_h, B_w)
    tgt = vertices(A_h, A_w)
    rs, rt = r_pairs(B_h, B_w), r_pairs(A_h, A_w)
    ss, st = s_pairs(B_h, B_w), s_pairs(A_h, A_w)
    order = src  # root first, then branches in order, levels ascending
    found = set()

    def extend(assign: dict):
        if len(assign) == len(order):
            if set(assign.values()) != set(tgt):
                return
            image_r = {(assign[a], assign[b]) for (a, b) in rs}
            image_s = {(assign[a], assign[b]) for (a, b) in ss}
            if image_r == rt and image_s == st:
                found.add(frozenset(assign.items()))
            return
        v = order[len(assign)]
        for t in tgt:
            assign[v] = t
            ok = True
            for (a, b) in rs:
                if a in assign and b in assign and (assign[a], assign[b]) not in rt:
                    ok = False
                    break
            if ok:
                extend(assign)
            del assign[v]

    extend({})
    return found
