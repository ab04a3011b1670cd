"""Finite ordered fans, epimorphism enumeration, amalgamation, joint
projection, the block-sequence encoding of epimorphisms, and Ramsey-pair
checking.

A fan is a root with w branches of a common height h; vertices are the
root plus (branch, level) pairs.  The edge relation R holds on equal
vertices and immediate successors; the order relation S compares branch
indices, with the root lying on every branch.  An epimorphism is a
surjection whose image of each relation is exactly the target relation;
between ordered fans this is equivalent to grouping source branches into
consecutive intervals, one per target branch, mapping each branch by a
monotone unit-step level map, with some branch per group reaching the top.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator

from .fincore import BlockSequence, FinElement, SpanError, block_sequence, zero_element
from .search import Budget, BudgetExceeded, SearchOutcome, _index_map, _verify

ROOT = (0, 0)


class FanError(ValueError):
    pass


@dataclass(frozen=True)
class OrderedFan:
    """A fan with branches 1..width of the given height, branch-ordered."""

    height: int
    width: int

    def __post_init__(self):
        if self.height < 0 or self.width < 1:
            raise FanError(f"bad fan shape {self.height}:{self.width}")
        if self.height == 0 and self.width != 1:
            raise FanError("a height-0 fan is a single vertex of width 1")

    def vertices(self) -> list[tuple[int, int]]:
        out = [ROOT]
        for j in range(1, self.width + 1):
            out.extend((j, i) for i in range(1, self.height + 1))
        return out

    def branch(self, j: int) -> list[tuple[int, int]]:
        return [ROOT] + [(j, i) for i in range(1, self.height + 1)]

    def r_pairs(self) -> set[tuple]:
        pairs = {(v, v) for v in self.vertices()}
        for j in range(1, self.width + 1):
            prev = ROOT
            for i in range(1, self.height + 1):
                pairs.add((prev, (j, i)))
                prev = (j, i)
        return pairs

    def s_pairs(self) -> set[tuple]:
        # S(x, y) iff x lies on a branch preceding (or equal to) one with y;
        # the root lies on every branch
        pairs = set()
        for x in self.vertices():
            for y in self.vertices():
                if x == ROOT or y == ROOT or x[0] <= y[0]:
                    pairs.add((x, y))
        return pairs

    def serialize(self) -> str:
        return f"{self.height}:{self.width}"

    @staticmethod
    def deserialize(text: str) -> "OrderedFan":
        h, w = text.split(":")
        return OrderedFan(int(h), int(w))


@dataclass(frozen=True)
class FanMap:
    """A structured map between ordered fans: boundaries group source
    branches into one consecutive interval per target branch, and each
    source branch carries its ascending step levels (where the image
    climbs one target level)."""

    source: OrderedFan
    target: OrderedFan
    boundaries: tuple[int, ...]
    steps: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n, m = self.source.width, self.target.width
        b = self.boundaries
        if len(b) != m + 1 or b[0] != 1 or b[-1] != n + 1 or any(
                x >= y for x, y in zip(b, b[1:])):
            raise FanError(f"bad boundary tuple {b} for widths {n}->{m}")
        if len(self.steps) != n:
            raise FanError("one step list per source branch required")
        for st in self.steps:
            if len(st) > self.target.height:
                raise FanError(f"too many step levels: {st}")
            if any(not 1 <= x <= self.source.height for x in st):
                raise FanError(f"step level out of range: {st}")
            if any(x >= y for x, y in zip(st, st[1:])):
                raise FanError(f"step levels must be strictly ascending: {st}")

    def group_of(self, j: int) -> int:
        for s in range(self.target.width):
            if self.boundaries[s] <= j < self.boundaries[s + 1]:
                return s + 1
        raise FanError(f"branch {j} outside boundaries")

    def apply(self, v: tuple[int, int]) -> tuple[int, int]:
        if v == ROOT:
            return ROOT
        j, i = v
        level = sum(1 for x in self.steps[j - 1] if x <= i)
        return (self.group_of(j), level) if level else ROOT

    def vertex_map(self) -> dict:
        return {v: self.apply(v) for v in self.source.vertices()}

    def compose(self, inner: "FanMap") -> "FanMap":
        """self o inner, as a structured map."""
        if inner.target != self.source:
            raise FanError("composition level mismatch")
        vm = {v: self.apply(inner.apply(v)) for v in inner.source.vertices()}
        return FanMap.from_vertex_map(inner.source, self.target, vm)

    @staticmethod
    def identity(A: "OrderedFan") -> "FanMap":
        return FanMap(A, A, tuple(range(1, A.width + 2)),
                      tuple(tuple(range(1, A.height + 1)) for _ in range(A.width)))

    @staticmethod
    def from_vertex_map(source: OrderedFan, target: OrderedFan, vm: dict) -> "FanMap":
        """Recover the structured form; validates the grouping shape."""
        if vm.get(ROOT) != ROOT:
            raise FanError("root must map to root")
        groups = []
        steps = []
        for j in range(1, source.width + 1):
            levels = [vm[(j, i)] for i in range(1, source.height + 1)]
            tbranches = {t[0] for t in levels if t != ROOT}
            if len(tbranches) > 1:
                raise FanError(f"branch {j} maps into several target branches")
            groups.append(tbranches.pop() if tbranches else None)
            st = []
            prev = 0
            for i, t in enumerate(levels, start=1):
                lvl = 0 if t == ROOT else t[1]
                if lvl == prev + 1:
                    st.append(i)
                elif lvl != prev:
                    raise FanError(f"branch {j} is not a unit-step monotone map")
                prev = lvl
            steps.append(tuple(st))
        # fill ungrouped (all-root) branches consistently with neighbours
        assigned = [g for g in groups]
        current = 1
        for j in range(source.width):
            if assigned[j] is None:
                assigned[j] = current
            else:
                if assigned[j] < current:
                    raise FanError("branch groups are not consecutive")
                current = assigned[j]
        boundaries = [1]
        for s in range(1, target.width + 1):
            boundaries.append(max(boundaries[-1],
                                  1 + max((j + 1 for j in range(source.width)
                                           if assigned[j] <= s), default=0)))
        boundaries[-1] = source.width + 1
        fm = FanMap(source, target, tuple(boundaries), tuple(steps))
        if fm.vertex_map() != vm:
            raise FanError("vertex map is not an ordered-fan epimorphism shape")
        return fm

    def serialize(self) -> str:
        stepss = ";".join("(" + ",".join(str(x) for x in st) + ")" for st in self.steps)
        bnds = ",".join(str(b) for b in self.boundaries)
        return (f"map:{self.source.serialize()}->{self.target.serialize()}"
                f":b[{bnds}]:s[{stepss}]")


def is_epimorphism(f: FanMap) -> bool:
    """Definition-level check: surjective, and the image of each relation
    is exactly the target relation."""
    vm = f.vertex_map()
    if set(vm.values()) != set(f.target.vertices()):
        return False
    image_r = {(vm[a], vm[b]) for (a, b) in f.source.r_pairs()}
    if image_r != f.target.r_pairs():
        return False
    image_s = {(vm[a], vm[b]) for (a, b) in f.source.s_pairs()}
    return image_s == f.target.s_pairs()


def enumerate_epimorphisms(B: OrderedFan, A: OrderedFan) -> Iterator[FanMap]:
    """All epimorphisms B -> A, each vertex map exactly once: outer loop
    over strictly increasing branch boundaries, inner loop over per-branch
    step sets, filtered so that each group has a branch reaching the top
    target level.  A branch collapsed to the root belongs to the group on
    its left, so later groups must open with a stepping branch."""
    n, m = B.width, A.width
    if A.height > B.height or m > n:
        return
    step_choices = []
    for size in range(A.height + 1):
        step_choices.extend(combinations(range(1, B.height + 1), size))
    for inner in combinations(range(2, n + 1), m - 1):
        boundaries = (1,) + inner + (n + 1,)
        for steps in product(step_choices, repeat=n):
            ok = True
            for s in range(m):
                lo, hi = boundaries[s], boundaries[s + 1]
                if not any(len(steps[j - 1]) == A.height for j in range(lo, hi)):
                    ok = False
                    break
                if s >= 1 and A.height >= 1 and not steps[lo - 1]:
                    ok = False  # duplicate of a map grouped one branch left
                    break
            if ok:
                yield FanMap(B, A, boundaries, steps)


def epimorphisms_brute(B: OrderedFan, A: OrderedFan) -> set[frozenset]:
    """Vertex-map enumeration with only R-preservation pruned during
    assignment; surjectivity and both witness conditions checked at the
    leaves.  Returns vertex maps as frozensets of pairs."""
    src = B.vertices()
    tgt = A.vertices()
    rs, rt = B.r_pairs(), A.r_pairs()
    ss, st = B.s_pairs(), A.s_pairs()
    rt_succ = {}
    for (a, b) in rt:
        rt_succ.setdefault(a, set()).add(b)
    found = set()
    assign: dict = {}

    def extend(pos: int):
        if pos == len(src):
            if set(assign.values()) != set(tgt):
                return
            if {(assign[a], assign[b]) for (a, b) in rs} != rt:
                return
            if {(assign[a], assign[b]) for (a, b) in ss} != st:
                return
            found.add(frozenset(assign.items()))
            return
        v = src[pos]
        if v == ROOT:
            candidates = tgt
        else:
            j, i = v
            prev = assign[(j, i - 1)] if i > 1 else assign[ROOT]
            candidates = rt_succ.get(prev, set())
        for t in candidates:
            assign[v] = t
            extend(pos + 1)
            del assign[v]

    extend(0)
    return found


# ---------------------------------------------------------------------------
# amalgamation and joint projection


def _phi_levels(f: FanMap, j: int) -> int:
    """Image height of source branch j."""
    return len(f.steps[j - 1])


def _pair_schedule(hu: list[int], hv: list[int]) -> list[tuple[int, int]]:
    """Monotone pairing of two branch lists by image height, such that
    every position is completed by some pair: pair (i, j) completes i when
    hu[i] <= hv[j] and j when hv[j] <= hu[i].  Both lists contain a
    full-height entry; split there and walk greedily toward it."""
    full_u = hu.index(max(hu))
    full_v = hv.index(max(hv))

    def forward(us, vs, off_u, off_v):
        # last entries are maximal in their lists
        pairs = []
        i, j = 0, 0
        while i < len(us) or j < len(vs):
            ii, jj = min(i, len(us) - 1), min(j, len(vs) - 1)
            pairs.append((off_u + ii, off_v + jj))
            if i >= len(us):
                j += 1
            elif j >= len(vs):
                i += 1
            elif us[ii] < vs[jj]:
                i += 1
            elif us[ii] > vs[jj]:
                j += 1
            else:
                i += 1
                j += 1
        return pairs

    def backward(us, vs, off_u, off_v):
        rev = forward(us[::-1], vs[::-1], 0, 0)
        return sorted((off_u + len(us) - 1 - a, off_v + len(vs) - 1 - b)
                      for a, b in rev)

    first = forward(hu[:full_u + 1], hv[:full_v + 1], 0, 0)
    second = backward(hu[full_u:], hv[full_v:], full_u, full_v)
    merged = first + [p for p in second if p != first[-1]]
    return merged


def amalgamate(A: OrderedFan, B: OrderedFan, C: OrderedFan,
               phi1: FanMap, phi2: FanMap) -> tuple[OrderedFan, FanMap, FanMap]:
    """Cone completion: D with psi1: D -> B and psi2: D -> C such that
    phi1 o psi1 = phi2 o psi2.

    Per target branch of A the source branches of B and C are paired in a
    monotone schedule; each pair yields one branch of D built from blocks
    of size max(|level fiber in B|, |level fiber in C|), walked onto both
    fibers in an edge-preserving way.  All branches are padded to a common
    height at the end.
    """
    if phi1.source != B or phi1.target != A or phi2.source != C or phi2.target != A:
        raise FanError("maps do not connect B -> A <- C")
    if not (is_epimorphism(phi1) and is_epimorphism(phi2)):
        raise FanError("amalgamation requires epimorphisms")

    branch_specs = []  # per D-branch: (b branch, c branch, walk length levels)
    for s in range(1, A.width + 1):
        ub = [j for j in range(1, B.width + 1) if phi1.group_of(j) == s]
        vb = [j for j in range(1, C.width + 1) if phi2.group_of(j) == s]
        hu = [_phi_levels(phi1, j) for j in ub]
        hv = [_phi_levels(phi2, j) for j in vb]
        for iu, iv in _pair_schedule(hu, hv):
            branch_specs.append((ub[iu], vb[iv], min(hu[iu], hv[iv])))

    # walk each pair: per target level 0..cap, block size = max fiber size
    walks = []
    for bj, cj, cap in branch_specs:
        fib_b = _level_fibers(phi1, bj)
        fib_c = _level_fibers(phi2, cj)
        walk_b, walk_c = [], []
        for lvl in range(cap + 1):
            size = max(len(fib_b[lvl]), len(fib_c[lvl]))
            for t in range(size):
                walk_b.append(fib_b[lvl][min(t, len(fib_b[lvl]) - 1)])
                walk_c.append(fib_c[lvl][min(t, len(fib_c[lvl]) - 1)])
        walks.append((walk_b, walk_c))

    height = max(len(wb) - 1 for wb, _ in walks)
    D = OrderedFan(height, len(walks)) if height else OrderedFan(0, 1)
    vm1 = {ROOT: ROOT}
    vm2 = {ROOT: ROOT}
    for dj, (walk_b, walk_c) in enumerate(walks, start=1):
        for i in range(1, height + 1):
            vm1[(dj, i)] = walk_b[min(i, len(walk_b) - 1)]
            vm2[(dj, i)] = walk_c[min(i, len(walk_c) - 1)]
    psi1 = FanMap.from_vertex_map(D, B, vm1)
    psi2 = FanMap.from_vertex_map(D, C, vm2)
    return D, psi1, psi2


def _level_fibers(f: FanMap, j: int) -> list[list[tuple[int, int]]]:
    """Vertices of source branch j per image level 0..image height, in
    branch order (the root opens level 0)."""
    fibers: list[list[tuple[int, int]]] = [[] for _ in range(len(f.steps[j - 1]) + 1)]
    fibers[0].append(ROOT)
    for i in range(1, f.source.height + 1):
        lvl = sum(1 for x in f.steps[j - 1] if x <= i)
        if lvl < len(fibers):
            fibers[lvl].append((j, i))
        # levels past the image height cannot occur for valid maps
    return fibers


def joint_projection(A: OrderedFan, B: OrderedFan) -> tuple[OrderedFan, FanMap, FanMap]:
    """A common preimage: the fan of the maximum height and width, with the
    canonical collapse onto each of A and B."""
    C = OrderedFan(max(A.height, B.height), max(A.width, B.width))

    def collapse(target: OrderedFan) -> FanMap:
        vm = {ROOT: ROOT}
        for j in range(1, C.width + 1):
            tj = min(j, target.width)
            for i in range(1, C.height + 1):
                lvl = min(i, target.height)
                vm[(j, i)] = (tj, lvl) if lvl else ROOT
        return FanMap.from_vertex_map(C, target, vm)

    return C, collapse(A), collapse(B)


# ---------------------------------------------------------------------------
# the block-sequence encoding of epimorphisms


@dataclass(frozen=True)
class EncodedEpi:
    """An epimorphism U -> S coded as a block sequence plus the minimal
    preimage families that make the coding injective."""

    fstar: BlockSequence
    families: tuple[tuple[tuple[int, tuple[int, ...]], ...], ...]

    def serialize(self) -> str:
        fams = ";".join(
            ",".join(f"{j}:({'/'.join(str(x) for x in lv)})" for j, lv in fam)
            for fam in self.families)
        return f"enc:{self.fstar.serialize()}:F[{fams}]"


def encode_epimorphism(f: FanMap) -> EncodedEpi:
    """Code f: U -> S over the branch structure: entry i of the block
    sequence has support on the U-branches whose image meets level 1 of
    S-branch i, with value the image level of the branch top; the family
    records the first source level reaching each positive image level."""
    U, S = f.source, f.target
    if S.height < 1:
        raise FanError("encoding needs a target of height >= 1")
    if not is_epimorphism(f):
        raise FanError("encoding requires an epimorphism")
    k, d, n = S.height, S.width, U.width
    entries = []
    families = []
    for i in range(1, d + 1):
        values = [0] * n
        fam = []
        for j in range(1, n + 1):
            if f.group_of(j) != i:
                continue
            z = len(f.steps[j - 1])  # image level of the branch top
            if z == 0:
                continue
            values[j - 1] = z
            fam.append((j, f.steps[j - 1]))  # first level hitting each 1..z
        entries.append(FinElement(k, tuple(values)))
        families.append(tuple(fam))
    return EncodedEpi(block_sequence(entries), tuple(families))


# ---------------------------------------------------------------------------
# Ramsey pairs


def check_ramsey_pair(S: OrderedFan, T: OrderedFan, U: OrderedFan, r: int,
                      workers: int = 1, budget: Budget | None = None) -> SearchOutcome:
    """Does every r-coloring of the epimorphisms U -> S admit g: U -> T
    with the whole composite family (T -> S) o g monochromatic?"""
    if T.height < S.height or T.width < S.width:
        raise FanError("inadmissible pair: T must dominate S")
    domain = sorted(enumerate_epimorphisms(U, S), key=lambda f: f.serialize())
    index = _index_map(domain)
    hs = list(enumerate_epimorphisms(T, S))
    witnesses = []
    for g in enumerate_epimorphisms(U, T):
        try:
            group = [index[h.compose(g)] for h in hs]
        except KeyError as exc:  # composite not an epimorphism onto S: impossible
            raise FanError("composition left the epimorphism space") from exc
        witnesses.append([group])
    return _verify(domain, witnesses, r, U.height, workers, budget)


def _fans_with_vertex_count(total: int) -> list[OrderedFan]:
    if total == 1:
        return [OrderedFan(0, 1)]
    out = []
    for w in range(1, total):
        if (total - 1) % w == 0:
            out.append(OrderedFan((total - 1) // w, w))
    return sorted(out, key=lambda f: f.width)


def min_ramsey_witness(S: OrderedFan, T: OrderedFan, r: int,
                       workers: int = 1, budget: Budget | None = None) -> OrderedFan:
    """Least fan U (by total vertex count, then width) passing the
    Ramsey-pair check."""
    if T.height < S.height or T.width < S.width:
        raise FanError("inadmissible pair: T must dominate S")
    total = 1
    while True:
        if budget is not None:
            budget.tick()
        for U in _fans_with_vertex_count(total):
            outcome = check_ramsey_pair(S, T, U, r, workers, budget)
            if outcome.holds:
                return U
        total += 1
