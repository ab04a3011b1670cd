"""Bounded-value sequences, tetris operations, block spans, and term algebra.

An element of FIN_k(n) is a function {1..n} -> {0..k} stored as a value
tuple.  The tetris operation T_i decrements every value >= i and fixes the
smaller ones; T_0 is the identity.  Index vectors select compositions of
tetris operations, and spans collect all block-ordered sums of such images.
Every span element carries a symbolic term representation so that the
T_1-preimage lift used by the witness pipeline is syntactic, not a search.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Iterator


class SpanError(ValueError):
    """Raised for level/width/support violations in span arithmetic."""


# ---------------------------------------------------------------------------
# elements


@dataclass(frozen=True)
class FinElement:
    """A function {1..width} -> {0..level}, width = len(values).

    Level 0 is allowed internally so that tetris compositions can produce
    the zero function; public constructors require level >= 1.
    """

    level: int
    values: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise SpanError(f"level must be >= 0, got {self.level}")
        if not self.values:
            raise SpanError("width must be >= 1")
        for v in self.values:
            if not 0 <= v <= self.level:
                raise SpanError(
                    f"value {v} out of range 0..{self.level} in {self.values}")

    @property
    def width(self) -> int:
        return len(self.values)

    @property
    def support(self) -> tuple[int, ...]:
        """1-based positions with nonzero value."""
        return tuple(i + 1 for i, v in enumerate(self.values) if v)

    @property
    def attains(self) -> bool:
        """True iff some value equals the level (vacuous at level 0)."""
        return self.level in self.values

    @property
    def is_zero(self) -> bool:
        return not any(self.values)

    def sort_key(self) -> tuple:
        # canonical total order: length-lexicographic on value sequences
        return (len(self.values), self.values, self.level)

    def __lt__(self, other: "FinElement") -> bool:
        return self.sort_key() < other.sort_key()

    def packed(self) -> int:
        """Values packed into fixed-width bit fields, for compact keys."""
        bits = max(1, (self.level).bit_length())
        out = 0
        for v in reversed(self.values):
            out = (out << bits) | v
        return out

    def pad(self, width: int) -> "FinElement":
        """Embed into a wider ambient interval by appending zeros."""
        if width < self.width:
            raise SpanError(f"cannot pad width {self.width} down to {width}")
        if width == self.width:
            return self
        return FinElement(self.level, self.values + (0,) * (width - self.width))

    def serialize(self) -> str:
        vals = ",".join(str(v) for v in self.values)
        return f"{self.level}:{self.width}:[{vals}]"

    @staticmethod
    def deserialize(text: str) -> "FinElement":
        level_s, width_s, vals_s = text.split(":", 2)
        if not (vals_s.startswith("[") and vals_s.endswith("]")):
            raise SpanError(f"malformed element serialization: {text!r}")
        values = tuple(int(v) for v in vals_s[1:-1].split(",")) if vals_s != "[]" else ()
        elem = FinElement(int(level_s), values)
        if elem.width != int(width_s):
            raise SpanError(f"width mismatch in serialization: {text!r}")
        return elem


def make_element(k: int, n: int, values) -> FinElement:
    """Validated constructor for a member of FIN_k(n)."""
    if k < 1:
        raise SpanError(f"level must be >= 1, got {k}")
    if n < 1:
        raise SpanError(f"width must be >= 1, got {n}")
    values = tuple(int(v) for v in values)
    if len(values) != n:
        raise SpanError(f"expected {n} values, got {len(values)}")
    return FinElement(k, values)


def zero_element(level: int, width: int) -> FinElement:
    return FinElement(level, (0,) * width)


def relevel(p: FinElement, level: int) -> FinElement:
    """View the same value sequence at a higher ambient level."""
    if level < max(p.values, default=0):
        raise SpanError(f"values exceed level {level}")
    if level == p.level:
        return p
    return FinElement(level, p.values)


def tetris(i: int, p: FinElement) -> FinElement:
    """T_i: decrement values >= i, fix values < i; T_0 is the identity.

    For i >= 1 the result lives one level down.  Total on all elements,
    attainment is not required.
    """
    if i < 0 or i > p.level:
        raise SpanError(f"tetris index {i} out of range 0..{p.level}")
    if i == 0:
        return p
    return FinElement(p.level - 1,
                      tuple(v if v < i else v - 1 for v in p.values))


def tetris_power(i: int, m: int, p: FinElement) -> FinElement:
    """m-fold iterate of T_i."""
    for _ in range(m):
        p = tetris(i, p)
    return p


def partial_add(p: FinElement, q: FinElement) -> FinElement:
    """Pointwise sum, defined when p's support lies entirely before q's.

    An empty support is neutral on either side.
    """
    if p.level != q.level:
        raise SpanError(f"level mismatch: {p.level} vs {q.level}")
    if p.width != q.width:
        raise SpanError(f"width mismatch: {p.width} vs {q.width}")
    sp, sq = p.support, q.support
    if sp and sq and not sp[-1] < sq[0]:
        raise SpanError(f"supports not block-ordered: {sp} vs {sq}")
    return FinElement(p.level, tuple(a + b for a, b in zip(p.values, q.values)))


# ---------------------------------------------------------------------------
# block sequences


@dataclass(frozen=True)
class BlockSequence:
    """Nonempty list of same-level, same-width elements with strictly
    separated supports; every entry attains its level."""

    entries: tuple[FinElement, ...]

    def __post_init__(self):
        if not self.entries:
            raise SpanError("block sequence must be nonempty")
        first = self.entries[0]
        prev_max = 0
        for e in self.entries:
            if e.level != first.level or e.width != first.width:
                raise SpanError("mixed levels or widths in block sequence")
            if not e.attains:
                raise SpanError(f"entry does not attain level {e.level}: {e.values}")
            supp = e.support
            if not supp:
                raise SpanError("block sequence entry has empty support")
            if supp[0] <= prev_max:
                raise SpanError("supports of consecutive entries overlap or touch out of order")
            prev_max = supp[-1]

    @property
    def level(self) -> int:
        return self.entries[0].level

    @property
    def width(self) -> int:
        return self.entries[0].width

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, s: int) -> FinElement:
        return self.entries[s]

    def __iter__(self):
        return iter(self.entries)

    def sort_key(self) -> tuple:
        return tuple(e.sort_key() for e in self.entries)

    def __lt__(self, other: "BlockSequence") -> bool:
        return self.sort_key() < other.sort_key()

    def pad(self, width: int) -> "BlockSequence":
        return BlockSequence(tuple(e.pad(width) for e in self.entries))

    def serialize(self) -> str:
        return "|".join(e.serialize() for e in self.entries)

    @staticmethod
    def deserialize(text: str) -> "BlockSequence":
        return BlockSequence(tuple(FinElement.deserialize(t) for t in text.split("|")))


def block_sequence(entries) -> BlockSequence:
    return BlockSequence(tuple(entries))


def apply_tetris(i: int, B: BlockSequence) -> BlockSequence:
    """Entrywise tetris image of a block sequence."""
    return BlockSequence(tuple(tetris(i, e) for e in B))


def unit_blocks(n: int) -> BlockSequence:
    """The block sequence of n singleton characteristic functions."""
    entries = []
    for i in range(n):
        vals = [0] * n
        vals[i] = 1
        entries.append(FinElement(1, tuple(vals)))
    return BlockSequence(tuple(entries))


# ---------------------------------------------------------------------------
# enumeration


def enumerate_elements(k: int, n: int, attain: bool = True) -> Iterator[FinElement]:
    """All elements of FIN_k(n) in lexicographic order on value tuples.

    Without the attainment filter the count is (k+1)^n including the zero
    function; with it, (k+1)^n - k^n.
    """
    if k < 1 or n < 1:
        raise SpanError("k and n must be >= 1")
    for values in product(range(k + 1), repeat=n):
        if attain and k not in values:
            continue
        yield FinElement(k, values)


def enumerate_block_sequences(k: int, n: int, d: int) -> Iterator[BlockSequence]:
    """All length-d block sequences of attaining elements of FIN_k(n),
    in lexicographic order on entry tuples.  Empty when d > n."""
    if d < 1:
        raise SpanError("d must be >= 1")
    attaining = [e for e in enumerate_elements(k, n, attain=True)]

    def extend(prefix: list[FinElement], prev_max: int, remaining: int):
        if remaining == 0:
            yield BlockSequence(tuple(prefix))
            return
        for e in attaining:
            supp = e.support
            if supp[0] > prev_max:
                prefix.append(e)
                yield from extend(prefix, supp[-1], remaining - 1)
                prefix.pop()

    yield from extend([], 0, d)


# ---------------------------------------------------------------------------
# operation vectors


@dataclass(frozen=True)
class OpVector:
    """An index vector selecting a composition of tetris operations.

    full:  coords (i(1),..,i(k)) with i(j) in 0..j, applied to level k.
    upper: coords (i(k+1),..,i(l)) with i(j) in 1..j, applied to level
           l = k + len(coords); empty coords denote the identity at l = k.
    Coordinates apply right to left (the last coordinate acts first).
    """

    kind: str
    coords: tuple[int, ...]
    k: int

    def __post_init__(self):
        if self.kind == "full":
            if self.k != len(self.coords) or self.k < 0:
                raise SpanError("full vector: k must equal len(coords)")
            for j, c in enumerate(self.coords, start=1):
                if not 0 <= c <= j:
                    raise SpanError(f"full coordinate {c} out of 0..{j}")
        elif self.kind == "upper":
            if self.k < 1:
                raise SpanError("upper vector: k must be >= 1")
            for idx, c in enumerate(self.coords):
                j = self.k + 1 + idx
                if not 1 <= c <= j:
                    raise SpanError(f"upper coordinate {c} out of 1..{j}")
        else:
            raise SpanError(f"unknown vector kind {self.kind!r}")

    @property
    def in_level(self) -> int:
        return self.k if self.kind == "full" else self.k + len(self.coords)

    @property
    def all_zero(self) -> bool:
        return self.kind == "full" and not any(self.coords)

    def serialize(self) -> str:
        return f"{self.kind}:{self.k}:({','.join(str(c) for c in self.coords)})"


def full_vector(coords) -> OpVector:
    coords = tuple(coords)
    return OpVector("full", coords, len(coords))


def upper_vector(k: int, coords) -> OpVector:
    return OpVector("upper", tuple(coords), k)


def zero_vector(k: int) -> OpVector:
    return full_vector((0,) * k)


def iter_full_vectors(k: int) -> Iterator[OpVector]:
    """All of P_k = prod_{j=1}^k {0..j}, lexicographic."""
    for coords in product(*(range(j + 1) for j in range(1, k + 1))):
        yield full_vector(coords)


def iter_upper_vectors(k: int, l: int) -> Iterator[OpVector]:
    """All of the upper product from level l down to level k; the identity
    alone when l = k."""
    if l < k:
        raise SpanError(f"upper vectors need l >= k, got k={k}, l={l}")
    for coords in product(*(range(1, j + 1) for j in range(k + 1, l + 1))):
        yield upper_vector(k, coords)


def tetris_compose(vec: OpVector, p: FinElement) -> FinElement:
    """Apply the composition selected by vec, innermost coordinate first."""
    if p.level != vec.in_level:
        raise SpanError(f"vector expects level {vec.in_level}, element has {p.level}")
    for c in reversed(vec.coords):
        p = tetris(c, p)
    return p


def normalize_zeros_first(vec: OpVector) -> OpVector:
    """Pointwise-equal full vector with all zero coordinates moved to the
    front (stable on the nonzero coordinates)."""
    if vec.kind != "full":
        raise SpanError("normalization applies to full vectors")
    nz = [c for c in vec.coords if c]
    return full_vector((0,) * (len(vec.coords) - len(nz)) + tuple(nz))


def vec_plus_one(vec: OpVector) -> OpVector:
    """Lift a full vector one level up: prepend 0 and increment every
    nonzero coordinate, so that T_vec(T_1(p)) = T_1(T_lifted(p)) for all p
    one level above vec.  Zero coordinates stay identity operations."""
    if vec.kind != "full":
        raise SpanError("vec_plus_one applies to full vectors")
    return full_vector((0,) + tuple(c + 1 if c else 0 for c in vec.coords))


def vec_minus_one(vec: OpVector) -> OpVector:
    """Push an outer T_1 through a full vector: normalize zeros first,
    strip one leading zero, and shift coordinates >= 2 down by one.
    Inverse of vec_plus_one on its image; requires a zero coordinate."""
    if vec.kind != "full":
        raise SpanError("vec_minus_one applies to full vectors")
    if all(vec.coords):
        raise SpanError("vector with no zero coordinate annihilates; cannot shift")
    norm = normalize_zeros_first(vec)
    return full_vector(tuple(c - 1 if c >= 2 else c for c in norm.coords[1:]))


# ---------------------------------------------------------------------------
# span selectors and spans


@dataclass(frozen=True)
class SpanSelector:
    """A set I of full vectors over P_k containing the all-zero vector."""

    k: int
    vectors: frozenset[OpVector]

    def __post_init__(self):
        for v in self.vectors:
            if v.kind != "full" or v.k != self.k:
                raise SpanError("selector vectors must be full at the selector level")
        if zero_vector(self.k) not in self.vectors:
            raise SpanError("selector must contain the all-zero vector")

    def sorted_vectors(self) -> list[OpVector]:
        return sorted(self.vectors, key=lambda v: v.coords)


def full_selector(k: int) -> SpanSelector:
    return SpanSelector(k, frozenset(iter_full_vectors(k)))


def binary_selector(k: int) -> SpanSelector:
    """The selector {0,1}^k of the original single-operation span."""
    vecs = [full_vector(c) for c in product((0, 1), repeat=k)]
    return SpanSelector(k, frozenset(vecs))


def neighbour_selector(k: int, lows) -> SpanSelector:
    """Selector prod_j {0, l_j, l_j+1} with l_j in 0..j-1."""
    lows = tuple(lows)
    if len(lows) != k:
        raise SpanError(f"need {k} neighbour indices, got {len(lows)}")
    axes = []
    for j, lj in enumerate(lows, start=1):
        if not 0 <= lj <= j - 1:
            raise SpanError(f"neighbour index {lj} out of 0..{j - 1}")
        axes.append(sorted({0, lj, lj + 1}))
    vecs = [full_vector(c) for c in product(*axes)]
    return SpanSelector(k, frozenset(vecs))


@dataclass(frozen=True)
class TermRepr:
    """Symbolic representation of a span element over a base block sequence:
    a sum over selected base indices of T_full(T_upper(base[s])).

    Invariants: at least one term has an all-zero full part, and no stored
    term vanishes (every full part has a zero coordinate).
    """

    base: BlockSequence
    k: int
    terms: tuple[tuple[int, OpVector, OpVector], ...]

    def __post_init__(self):
        if not self.terms:
            raise SpanError("term representation must select at least one entry")
        l = self.base.level
        prev = -1
        saw_zero = False
        for s, t, u in self.terms:
            if not 0 <= s < len(self.base):
                raise SpanError(f"term index {s} out of range")
            if s <= prev:
                raise SpanError("term indices must be strictly increasing")
            prev = s
            if t.kind != "full" or t.k != self.k:
                raise SpanError("full part must live at the output level")
            if u.kind != "upper" or u.k != self.k or u.in_level != l:
                raise SpanError("upper part must map the base level to the output level")
            if all(t.coords):
                raise SpanError("term with no zero coordinate vanishes; drop it")
            saw_zero = saw_zero or t.all_zero
        if not saw_zero:
            raise SpanError("some term must carry the all-zero full vector")

    def evaluate(self) -> FinElement:
        # a full part with z zero coordinates yields a level-z image; the
        # sum is read at the output level
        total = zero_element(self.k, self.base.width)
        for s, t, u in self.terms:
            img = tetris_compose(t, tetris_compose(u, self.base[s]))
            total = partial_add(total, relevel(img, self.k))
        return total


def t1_shift_terms(term: TermRepr, direction: str, base: BlockSequence | None = None) -> TermRepr:
    """Rewrite a term representation across the T_1 span shift.

    image:    from output level k >= 2 over base B to level k-1 over
              T_1(B); evaluation commutes: eval(image(t)) = T_1(eval(t)).
    preimage: from level k-1 over T_1(B) back to level k over the supplied
              base B; evaluation lifts: T_1(eval(preimage(t))) = eval(t).
    The round trip image(preimage(t)) is the identity; preimage(image(t))
    is the identity on terms whose combined vectors are zeros-first with no
    coordinate equal to 1 after the zero prefix.
    """
    l = term.base.level
    if direction == "image":
        if term.k < 2:
            raise SpanError("image shift needs output level >= 2")
        new_base = apply_tetris(1, term.base)
        new_terms = []
        for s, t, u in term.terms:
            combined = full_vector(t.coords + u.coords)
            down = vec_minus_one(combined)
            new_full = full_vector(down.coords[:term.k - 1])
            if new_full.coords and all(new_full.coords):
                continue  # a single-zero full part vanishes one level down
            new_terms.append((s, new_full,
                              upper_vector(term.k - 1, down.coords[term.k - 1:])))
        return TermRepr(new_base, term.k - 1, tuple(new_terms))
    if direction == "preimage":
        if base is None:
            raise SpanError("preimage shift needs the original base")
        if apply_tetris(1, base) != term.base:
            raise SpanError("supplied base does not T_1-project onto the term base")
        new_terms = []
        for s, t, u in term.terms:
            combined = full_vector(t.coords + u.coords)
            up = vec_plus_one(combined)
            new_terms.append((s, full_vector(up.coords[:term.k + 1]),
                              upper_vector(term.k + 1, up.coords[term.k + 1:])))
        return TermRepr(base, term.k + 1, tuple(new_terms))
    raise SpanError(f"unknown shift direction {direction!r}")


def _iter_index_subsets(m: int) -> Iterator[tuple[int, ...]]:
    # nonempty subsets of range(m) ordered by binary mask
    for mask in range(1, 1 << m):
        yield tuple(i for i in range(m) if mask >> i & 1)


def span(B: BlockSequence, I: SpanSelector) -> dict[FinElement, TermRepr]:
    """The span of B under the selector I: all sums over nonempty
    subsequences with vectors from I, at least one of them all-zero.

    Vanishing terms (vectors with no zero coordinate) act as omissions and
    are dropped.  Returns element -> first term representation found in
    canonical enumeration order; every element attains the level.
    """
    if I.k != B.level:
        raise SpanError(f"selector level {I.k} does not match sequence level {B.level}")
    return dict(_span_cached(B, I))


@lru_cache(maxsize=4096)
def _span_cached(B: BlockSequence, I: SpanSelector) -> dict[FinElement, TermRepr]:
    # the all-zero vector sorts first and is the only one fixing an entry,
    # so first-found dedup keeps it as the entry's own producer
    ident = upper_vector(B.level, ())
    options = []
    for e in B:
        per_entry = []
        seen = set()
        for v in I.sorted_vectors():
            img = tetris_compose(v, e)
            if img.is_zero:
                continue
            img = relevel(img, B.level)
            if img in seen:
                continue
            seen.add(img)
            per_entry.append((img, v))
        options.append(per_entry)

    out: dict[FinElement, TermRepr] = {}
    for subset in _iter_index_subsets(len(B)):
        for choice in product(*(options[s] for s in subset)):
            if not any(v.all_zero for _, v in choice):
                continue
            total = zero_element(B.level, B.width)
            for img, _ in choice:
                total = partial_add(total, img)
            if total not in out:
                terms = tuple((s, v, ident) for s, (_, v) in zip(subset, choice))
                out[total] = TermRepr(B, B.level, terms)
    return out


def combined_span_elements(B: BlockSequence, k: int) -> dict[FinElement, TermRepr]:
    """The two-layer span: sums of T_full(T_upper(b_s)) with full vectors
    over P_k, upper vectors from level l = B.level down to k, at least one
    all-zero full vector among the selected entries."""
    return dict(_combined_span_cached(B, k))


@lru_cache(maxsize=2048)
def _combined_span_cached(B: BlockSequence, k: int) -> dict[FinElement, TermRepr]:
    l = B.level
    if k > l:
        raise SpanError(f"need k <= l, got k={k}, l={l}")
    if k < 1:
        raise SpanError("k must be >= 1")
    uppers = list(iter_upper_vectors(k, l))
    fulls = list(iter_full_vectors(k))

    options = []
    for e in B:
        per_entry = []
        seen: dict[FinElement, tuple[OpVector, OpVector]] = {}
        zero_capable: dict[FinElement, tuple[OpVector, OpVector]] = {}
        for u in uppers:
            mid = tetris_compose(u, e)
            for t in fulls:
                if all(t.coords):
                    continue  # annihilates
                img = tetris_compose(t, mid)
                if img.is_zero:
                    continue
                img = relevel(img, k)
                if img not in seen:
                    seen[img] = (t, u)
                if t.all_zero and img not in zero_capable:
                    zero_capable[img] = (t, u)
        for img in seen:
            per_entry.append((img, seen[img], zero_capable.get(img)))
        per_entry.sort(key=lambda rec: rec[0].sort_key())
        options.append(per_entry)

    out: dict[FinElement, TermRepr] = {}
    for subset in _iter_index_subsets(len(B)):
        for choice in product(*(options[s] for s in subset)):
            if not any(zc for _, _, zc in choice):
                continue
            total = zero_element(k, B.width)
            for img, _, _ in choice:
                total = partial_add(total, img)
            if total in out:
                continue
            terms = []
            zero_used = False
            for s, (img, first, zc) in zip(subset, choice):
                if not zero_used and zc is not None:
                    terms.append((s, zc[0], zc[1]))
                    zero_used = True
                else:
                    terms.append((s, first[0], first[1]))
            out[total] = TermRepr(B, k, tuple(terms))
    return out


def sequences_from(elements, d: int) -> list[BlockSequence]:
    """All length-d block sequences with entries drawn from the given
    elements, ordered lexicographically."""
    elems = sorted(elements, key=lambda e: e.sort_key())
    out: list[BlockSequence] = []

    def extend(prefix: list[FinElement], prev_max: int, remaining: int):
        if remaining == 0:
            out.append(BlockSequence(tuple(prefix)))
            return
        for e in elems:
            supp = e.support
            if supp and supp[0] > prev_max:
                prefix.append(e)
                extend(prefix, supp[-1], remaining - 1)
                prefix.pop()

    extend([], 0, d)
    return out


def combined_span_d(B: BlockSequence, k: int, d: int) -> list[BlockSequence]:
    """All length-d block sequences with entries in the combined span."""
    if d < 1:
        raise SpanError("d must be >= 1")
    return sequences_from(combined_span_elements(B, k).keys(), d)


def span_sequences(B: BlockSequence, I: SpanSelector, d: int) -> list[BlockSequence]:
    """All length-d block sequences with entries in span(B, I)."""
    if d < 1:
        raise SpanError("d must be >= 1")
    return sequences_from(span(B, I).keys(), d)


def span_monochromatic(coloring: Callable, B: BlockSequence,
                       selector: SpanSelector | None = None,
                       k: int | None = None, d: int = 1):
    """Return the unique color of the span domain, or None if mixed.

    With a selector the domain is span(B, I); with k it is the combined
    span at output level k.  For d = 1 the coloring is queried on elements,
    otherwise on length-d block sequences over the span.  Oracle failures
    propagate from the coloring callable.
    """
    if (selector is None) == (k is None):
        raise SpanError("exactly one of selector and k must be given")
    if selector is not None:
        pool = span(B, selector).keys()
    else:
        pool = combined_span_elements(B, k).keys()
    domain = list(pool) if d == 1 else sequences_from(pool, d)
    color = None
    for obj in domain:
        c = coloring(obj)
        if color is None:
            color = c
        elif c != color:
            return None
    return color
