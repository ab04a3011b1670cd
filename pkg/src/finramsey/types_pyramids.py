"""Run-pattern types, pyramid sequences, height vectors, and the lifts
connecting them.

The type of an attaining element is the sequence of values along the
maximal constant runs of its support; it is blind to gaps and to where the
support sits.  Pyramids are the staircase elements 1,2,..,l,..,2,1 over
consecutive base blocks; height vectors read a span element back as its
per-pyramid maxima, and the pyramid lift inverts that reading.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .fincore import (
    BlockSequence,
    FinElement,
    SpanError,
    block_sequence,
    partial_add,
    relevel,
    tetris_power,
    unit_blocks,
    zero_element,
)


@dataclass(frozen=True)
class TypeSeq:
    """A type over k: values in 1..k, adjacent values differ, k attained."""

    k: int
    values: tuple[int, ...]

    def __post_init__(self):
        if not self.values:
            raise SpanError("type must be nonempty")
        if self.k not in self.values:
            raise SpanError(f"type must attain {self.k}: {self.values}")
        for v in self.values:
            if not 1 <= v <= self.k:
                raise SpanError(f"type value {v} out of 1..{self.k}")
        for a, b in zip(self.values, self.values[1:]):
            if a == b:
                raise SpanError(f"adjacent type values equal: {self.values}")

    @property
    def length(self) -> int:
        return len(self.values)

    def serialize(self) -> str:
        return f"{self.k}:({','.join(str(v) for v in self.values)})"


class TypeDecomposition(NamedTuple):
    """A type together with the block sequence witnessing it."""

    type: TypeSeq
    blocks: BlockSequence


def type_of(p: FinElement) -> TypeDecomposition:
    """Unique decomposition p = sum type[i] * indicator(blocks[i]) with
    adjacent type values distinct; blocks are the maximal constant-value
    runs of the support (gaps within a run are allowed)."""
    if not p.attains or p.level < 1:
        raise SpanError("type is defined for attaining elements of level >= 1")
    runs: list[tuple[int, list[int]]] = []
    for pos in p.support:
        v = p.values[pos - 1]
        if runs and runs[-1][0] == v:
            runs[-1][1].append(pos)
        else:
            runs.append((v, [pos]))
    phi = TypeSeq(p.level, tuple(v for v, _ in runs))
    entries = []
    for _, positions in runs:
        vals = [0] * p.width
        for pos in positions:
            vals[pos - 1] = 1
        entries.append(FinElement(1, tuple(vals)))
    return TypeDecomposition(phi, block_sequence(entries))


def type_of_sequence(pbar: BlockSequence) -> tuple[tuple[TypeSeq, ...], BlockSequence]:
    """Componentwise types of a block sequence, plus the concatenated
    witnessing blocks (a block sequence of the total type length)."""
    types = []
    blocks: list[FinElement] = []
    for p in pbar:
        phi, bs = type_of(p)
        types.append(phi)
        blocks.extend(bs)
    return tuple(types), block_sequence(blocks)


def map_type(phi: TypeSeq, B: BlockSequence) -> FinElement:
    """Weighted sum of unit-level blocks: sum phi[i] * indicator(B[i])."""
    if B.level != 1:
        raise SpanError("map_type expects level-1 blocks")
    if phi.length != len(B):
        raise SpanError(f"type length {phi.length} != block count {len(B)}")
    total = zero_element(phi.k, B.width)
    for v, b in zip(phi.values, B):
        total = partial_add(total, FinElement(phi.k, tuple(v * x for x in b.values)))
    return total


@lru_cache(maxsize=None)
def _single_type_counts(k: int, max_len: int) -> tuple[int, ...]:
    """counts[m] = number of types of length exactly m over k."""
    # dp over (last value, k attained)
    counts = [0] * (max_len + 1)
    state = {}
    for v in range(1, k + 1):
        state[(v, v == k)] = 1
    if max_len >= 1:
        counts[1] = sum(c for (v, att), c in state.items() if att)
    for m in range(2, max_len + 1):
        nxt: dict[tuple[int, bool], int] = {}
        for (v, att), c in state.items():
            for w in range(1, k + 1):
                if w == v:
                    continue
                key = (w, att or w == k)
                nxt[key] = nxt.get(key, 0) + c
        state = nxt
        counts[m] = sum(c for (v, att), c in state.items() if att)
    return tuple(counts)


def count_types(k: int, max_len: int, d: int) -> int:
    """Exact number of d-component types of total length <= max_len."""
    if k < 1 or max_len < 1 or d < 1:
        raise SpanError("k, max_len, d must be >= 1")
    single = _single_type_counts(k, max_len)
    # compositions of total length into d parts, each part >= 1
    total_by_len = [0] * (max_len + 1)
    total_by_len[0] = 1
    for _ in range(d):
        nxt = [0] * (max_len + 1)
        for used in range(max_len + 1):
            if not total_by_len[used]:
                continue
            for m in range(1, max_len - used + 1):
                nxt[used + m] += total_by_len[used] * single[m]
        total_by_len = nxt
    return sum(total_by_len)


# ---------------------------------------------------------------------------
# pyramids


@dataclass(frozen=True)
class PyramidSeq:
    """A block sequence of staircase elements of a common height.

    Each pyramid runs 1,2,..,level,..,2,1 over 2*level-1 consecutive blocks
    of a level-1 base sequence.
    """

    level: int
    count: int
    sequence: BlockSequence

    @property
    def width(self) -> int:
        return self.sequence.width

    def __iter__(self):
        return iter(self.sequence)

    def __getitem__(self, i: int) -> FinElement:
        return self.sequence[i]

    def tetris_image(self) -> "PyramidSeq":
        """Entrywise T_1 image: pyramids one level shorter."""
        if self.level < 2:
            raise SpanError("cannot lower pyramids below height 1")
        from .fincore import apply_tetris

        return PyramidSeq(self.level - 1, self.count, apply_tetris(1, self.sequence))


def make_pyramid_sequence(l: int, count: int, base: BlockSequence | None = None) -> PyramidSeq:
    """count pyramids of height l over the given level-1 base sequence of
    length count*(2l-1); defaults to unit blocks."""
    if l < 1 or count < 1:
        raise SpanError("height and count must be >= 1")
    span_len = 2 * l - 1
    if base is None:
        base = unit_blocks(count * span_len)
    if base.level != 1 or len(base) != count * span_len:
        raise SpanError(f"base must be a level-1 sequence of length {count * span_len}")
    entries = []
    for i in range(count):
        total = zero_element(l, base.width)
        for j in range(-(l - 1), l):
            a = base[(i * span_len) + l - 1 + j]
            weight = l - abs(j)
            total = partial_add(total, FinElement(l, tuple(weight * x for x in a.values)))
        entries.append(total)
    return PyramidSeq(l, count, block_sequence(entries))


def height_vector(C: PyramidSeq, p: FinElement) -> FinElement:
    """Per-pyramid maxima of p, as an element of width C.count."""
    if p.width != C.width:
        raise SpanError(f"width mismatch: element {p.width}, pyramids {C.width}")
    supports = [set(c.support) for c in C]
    heights = []
    for supp in supports:
        hs = [p.values[x - 1] for x in supp if p.values[x - 1]]
        heights.append(max(hs) if hs else 0)
    return FinElement(p.level, tuple(heights))


def height_vector_sequence(C: PyramidSeq, pbar: BlockSequence) -> BlockSequence:
    """Entrywise height vectors of a block sequence over the pyramids."""
    return block_sequence([height_vector(C, p) for p in pbar])


def collapse_heights(h: FinElement) -> tuple[int, ...]:
    """The nonzero height values in position order (position-free view)."""
    return tuple(v for v in h.values if v)


def pyramid_lift(q: FinElement, C: PyramidSeq) -> FinElement:
    """The canonical span element with height vector q: each supported
    pyramid is lowered to the prescribed height by iterated T_1."""
    if q.level > C.level:
        raise SpanError(f"lift needs level <= {C.level}, got {q.level}")
    if not q.attains:
        raise SpanError("lift requires an attaining height vector")
    if q.width != C.count:
        raise SpanError(f"height vector width {q.width} != pyramid count {C.count}")
    total = zero_element(q.level, C.width)
    for i in q.support:
        lowered = tetris_power(1, C.level - q.values[i - 1], C[i - 1])
        total = partial_add(total, relevel(lowered, q.level))
    return total


def pyramid_lift_sequence(qbar: BlockSequence, C: PyramidSeq) -> BlockSequence:
    return block_sequence([pyramid_lift(q, C) for q in qbar])


def followup_transfer(B: BlockSequence, C: PyramidSeq) -> BlockSequence:
    """Transfer a block sequence at the pyramid level into the pyramid
    span: entry s becomes the sum over supp(B[s]) of pyramids lowered to
    the prescribed heights.  Height vectors recover B entrywise."""
    if B.level != C.level:
        raise SpanError(f"sequence level {B.level} != pyramid height {C.level}")
    return pyramid_lift_sequence(B, C)
