"""Exhaustive verifiers and exact minimal-number searches.

Every finite statement here reduces to one shape: over a finite domain of
colorable objects, each witness candidate names groups of objects, and a
coloring satisfies the candidate when every group is monochromatic.  A
statement holds at size n when every r-coloring satisfies some candidate;
the verifier proves that by an exhaustive backtracking search for a
counterexample coloring, with forced-color propagation and canonical-color
pruning (sound because recoloring permutes counterexamples bijectively).

Counterexamples are reported as the lexicographically least canonical
coloring, which is independent of the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product

from .coloring import Coloring, canonical_key
from .fincore import (
    BlockSequence,
    FinElement,
    SpanError,
    SpanSelector,
    block_sequence,
    combined_span_d,
    combined_span_elements,
    enumerate_block_sequences,
    enumerate_elements,
    full_selector,
    neighbour_selector,
    partial_add,
    relevel,
    sequences_from,
    span,
    span_monochromatic,
    span_sequences,
    zero_element,
)
from .types_pyramids import type_of, type_of_sequence


class BudgetExceeded(RuntimeError):
    """Search budget ran out; partial progress is reported separately."""


@dataclass
class Budget:
    max_nodes: int | None = None
    deadline: float | None = None
    nodes: int = 0

    @staticmethod
    def make(nodes: int | None = None, seconds: float | None = None) -> "Budget":
        deadline = time.monotonic() + seconds if seconds is not None else None
        return Budget(nodes, deadline)

    def tick(self, amount: int = 1):
        self.nodes += amount
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise BudgetExceeded(f"node budget {self.max_nodes} exceeded")
        if self.deadline is not None and self.nodes % 256 == 0 \
                and time.monotonic() > self.deadline:
            raise BudgetExceeded("time budget exceeded")

    def remaining_seconds(self) -> float | None:
        if self.deadline is None:
            return None
        return max(0.0, self.deadline - time.monotonic())


# ---------------------------------------------------------------------------
# the generic for-all-colorings verifier


@dataclass
class GroupProblem:
    """Domain objects (by canonical key, in canonical order), witness
    candidates as lists of groups of object indices, and a color count."""

    keys: list[str]
    witnesses: list[list[list[int]]]
    colors: int


def _dfs_counterexample(problem: GroupProblem, prefix: tuple[int, ...],
                        budget: Budget | None) -> tuple[int, ...] | None:
    """Least canonical coloring breaking every witness, or None.

    A witness is broken when some group holds two colors.  Colors are
    assigned in domain-index order; a decision may use color c only when
    c <= 1 + max assigned color (canonical form under color permutation).
    """
    n = len(problem.keys)
    r = problem.colors

    group_members: list[list[int]] = []
    group_witness: list[int] = []
    obj_groups: list[list[int]] = [[] for _ in range(n)]
    wit_breakable: list[int] = []
    for w, groups in enumerate(problem.witnesses):
        breakable = 0
        for members in groups:
            if len(members) < 2:
                continue  # a singleton group can never break
            gid = len(group_members)
            group_members.append(members)
            group_witness.append(w)
            for i in members:
                obj_groups[i].append(gid)
            breakable += 1
        wit_breakable.append(breakable)
        if breakable == 0:
            return None  # witness satisfied by every coloring

    g_color = [0] * len(group_members)
    g_count = [0] * len(group_members)
    g_two = [False] * len(group_members)
    w_broken = [False] * len(problem.witnesses)
    w_closed = [0] * len(problem.witnesses)
    forbidden = [0] * n  # bitmask of colors 1..r
    colors = [0] * n
    full_mask = (1 << (r + 1)) - 2

    def apply(idx: int, c: int, trail: list) -> bool:
        """Assign and propagate; False on a dead branch."""
        colors[idx] = c
        ok = True
        for gid in obj_groups[idx]:
            w = group_witness[gid]
            trail.append((gid, g_color[gid], g_count[gid], g_two[gid],
                          w_broken[w], w_closed[w]))
            g_count[gid] += 1
            if g_color[gid] == 0:
                g_color[gid] = c
            elif g_color[gid] != c and not g_two[gid]:
                g_two[gid] = True
                w_broken[w] = True
            if not g_two[gid] and g_count[gid] == len(group_members[gid]):
                w_closed[w] += 1
            if not w_broken[w] and w_closed[w] == wit_breakable[w]:
                ok = False  # witness can no longer break: it will be satisfied
        return ok

    def undo(idx: int, trail: list):
        colors[idx] = 0
        for gid, gc, gn, gt, wb, wc in reversed(trail):
            w = group_witness[gid]
            g_color[gid], g_count[gid], g_two[gid] = gc, gn, gt
            w_broken[w], w_closed[w] = wb, wc

    def propagate_forbidden(idx: int) -> list[tuple[int, int]]:
        """After assigning idx: witnesses with one open breakable group,
        one unassigned member in it, force that member away from the
        group color.  Returns applied (obj, mask) for undo."""
        applied = []
        for gid in obj_groups[idx]:
            w = group_witness[gid]
            if w_broken[w] or w_closed[w] != wit_breakable[w] - 1:
                continue
            if g_two[gid] or g_count[gid] != len(group_members[gid]) - 1:
                continue
            target = next(i for i in group_members[gid] if colors[i] == 0)
            bit = 1 << g_color[gid]
            if not forbidden[target] & bit:
                forbidden[target] |= bit
                applied.append((target, bit))
        return applied

    def dfs(idx: int, max_used: int) -> tuple[int, ...] | None:
        if idx == n:
            return tuple(colors)
        if budget is not None:
            budget.tick()
        limit = min(r, max_used + 1)
        if idx < len(prefix):
            choices = [prefix[idx]] if prefix[idx] <= limit else []
        else:
            choices = range(1, limit + 1)
        for c in choices:
            if forbidden[idx] >> c & 1:
                continue
            trail: list = []
            alive = apply(idx, c, trail)
            if alive:
                applied = propagate_forbidden(idx)
                dead = any(forbidden[t] & full_mask == full_mask for t, _ in applied)
                if not dead:
                    found = dfs(idx + 1, max(max_used, c))
                    if found is not None:
                        return found
                for t, bit in applied:
                    forbidden[t] &= ~bit
            undo(idx, trail)
        return None

    if n == 0:
        # empty domain: the empty coloring is a counterexample iff every
        # witness is unbreakable ... which returned None above unless there
        # are no witnesses at all
        return () if not problem.witnesses else None
    return dfs(0, 0)


def _canonical_prefixes(depth: int, colors: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], max_used: int):
        if len(prefix) == depth:
            out.append(prefix)
            return
        for c in range(1, min(colors, max_used + 1) + 1):
            extend(prefix + (c,), max(max_used, c))

    extend((), 0)
    return out


_WORKER_PROBLEM: GroupProblem | None = None


def _worker_init(keys, witnesses, colors):
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = GroupProblem(list(keys), [[list(g) for g in w] for w in witnesses],
                                   colors)


def _worker_solve(args):
    prefix, max_nodes, seconds = args
    budget = Budget.make(max_nodes, seconds) if (max_nodes or seconds) else None
    try:
        return ("ok", _dfs_counterexample(_WORKER_PROBLEM, prefix, budget))
    except BudgetExceeded as exc:
        return ("budget", str(exc))


def search_counterexample(problem: GroupProblem, workers: int = 1,
                          budget: Budget | None = None) -> tuple[int, ...] | None:
    """Least canonical counterexample coloring, or None when the statement
    holds.  Identical result for every worker count: chunks are disjoint
    lexicographic intervals merged by taking the earliest hit."""
    n = len(problem.keys)
    if workers <= 1 or n < 8:
        return _dfs_counterexample(problem, (), budget)

    depth = 1
    while depth < min(8, n) and len(_canonical_prefixes(depth, problem.colors)) < 4 * workers:
        depth += 1
    prefixes = _canonical_prefixes(depth, problem.colors)
    max_nodes = budget.max_nodes if budget else None
    seconds = budget.remaining_seconds() if budget else None
    tasks = [(p, max_nodes, seconds) for p in prefixes]
    with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                             initargs=(problem.keys, problem.witnesses, problem.colors)) as pool:
        results = list(pool.map(_worker_solve, tasks))
    exceeded = [msg for status, msg in results if status == "budget"]
    if exceeded:
        raise BudgetExceeded(exceeded[0])
    for _, found in results:  # prefix order is lexicographic
        if found is not None:
            return found
    return None


# ---------------------------------------------------------------------------
# outcomes


@dataclass
class SearchOutcome:
    """Result of verifying one statement at one size."""

    verdict: str  # holds-at-n | fails-at-n | witness-found | none | budget-exceeded
    n: int | None = None
    witness: object = None
    color: int | None = None
    counterexample: dict[str, int] | None = None
    stats: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds-at-n"


@dataclass
class MinResult:
    """Exact minimal size with both certificates."""

    value: int
    fail_outcome: SearchOutcome | None  # counterexample at value-1 (None when value is the floor)
    holds_outcome: SearchOutcome


def _verify(keys_objects: list, witnesses_groups: list[list[list[int]]], r: int, n: int,
            workers: int, budget: Budget | None, stats: dict | None = None) -> SearchOutcome:
    keys = [canonical_key(o) for o in keys_objects]
    problem = GroupProblem(keys, witnesses_groups, r)
    base_stats = {"domain": len(keys), "witnesses": len(witnesses_groups)}
    if stats:
        base_stats.update(stats)
    try:
        cex = search_counterexample(problem, workers, budget)
    except BudgetExceeded as exc:
        return SearchOutcome("budget-exceeded", n, stats={**base_stats, "reason": str(exc)})
    if cex is None:
        return SearchOutcome("holds-at-n", n, stats=base_stats)
    table = {k: c for k, c in zip(keys, cex)}
    return SearchOutcome("fails-at-n", n, counterexample=table, stats=base_stats)


def _index_map(objects: list) -> dict:
    return {obj: i for i, obj in enumerate(objects)}


def _scan_min(verify_at, start: int, budget: Budget | None) -> MinResult:
    """Linear scan for the least n where verify_at(n) holds."""
    prev_fail: SearchOutcome | None = None
    n = start
    while True:
        outcome = verify_at(n)
        if outcome.verdict == "budget-exceeded":
            raise BudgetExceeded(
                f"budget exceeded at n={n}; verified failures up to n={n - 1}")
        if outcome.holds:
            return MinResult(n, prev_fail, outcome)
        prev_fail = outcome
        n += 1


# ---------------------------------------------------------------------------
# Milliken-Taylor (finite unions in higher dimension)


def mt_domain(n: int, d: int) -> list:
    """FIN_1 objects colorable at width n: elements for d=1, length-d
    block sequences otherwise."""
    elems = list(enumerate_elements(1, n))
    if d == 1:
        return elems
    return sequences_from(elems, d)


def mt_witness_group(B: BlockSequence, d: int) -> list:
    """FIN_1^{[d]}(B): unions over index subsets, as one group."""
    m = len(B)
    unions = {}
    for mask in range(1, 1 << m):
        total = zero_element(1, B.width)
        for s in range(m):
            if mask >> s & 1:
                total = partial_add(total, B[s])
        unions[total] = None
    elems = list(unions)
    if d == 1:
        return elems
    return sequences_from(elems, d)


def verify_mt(d: int, m: int, r: int, n: int, workers: int = 1,
              budget: Budget | None = None) -> SearchOutcome:
    """Does every r-coloring of FIN_1^{[d]}(n) admit a length-m block
    sequence all of whose length-d union sequences share one color?"""
    if d > m:
        raise SpanError("need d <= m")
    domain = mt_domain(n, d)
    index = _index_map(domain)
    witnesses = []
    for B in enumerate_block_sequences(1, n, m):
        group = [index[obj] for obj in mt_witness_group(B, d)]
        witnesses.append([group])
    return _verify(domain, witnesses, r, n, workers, budget)


def min_milliken_taylor(d: int, m: int, r: int, workers: int = 1,
                        budget: Budget | None = None) -> MinResult:
    return _scan_min(lambda n: verify_mt(d, m, r, n, workers, budget), m, budget)


# ---------------------------------------------------------------------------
# generalized block spans


def _gowers_witness_domains(k: int, l: int, m: int, d: int, n: int,
                            selector: SpanSelector | None):
    """Candidate sequences with their span domains, plus the sorted union."""
    candidates = []
    pool = {}
    for B in enumerate_block_sequences(l, n, m):
        if selector is not None:
            objs = list(span(B, selector)) if d == 1 else span_sequences(B, selector, d)
        else:
            objs = list(combined_span_elements(B, k)) if d == 1 \
                else combined_span_d(B, k, d)
        candidates.append((B, objs))
        for o in objs:
            pool[o] = None
    domain = sorted(pool, key=lambda o: o.sort_key())
    return candidates, domain


def verify_gowers(k: int, l: int, m: int, d: int, r: int, n: int,
                  selector: SpanSelector | None = None, workers: int = 1,
                  budget: Budget | None = None) -> SearchOutcome:
    """Does every r-coloring admit a length-m sequence in FIN_l(n) whose
    combined span down to level k (or selector span, for k = l) is
    monochromatic in dimension d?"""
    if d > m or k > l:
        raise SpanError("need d <= m and k <= l")
    if selector is not None and k != l:
        raise SpanError("a span selector requires k = l")
    candidates, domain = _gowers_witness_domains(k, l, m, d, n, selector)
    index = _index_map(domain)
    witnesses = [[[index[o] for o in objs]] for _, objs in candidates]
    return _verify(domain, witnesses, r, n, workers, budget)


def find_gowers_witness(coloring: Coloring, k: int, l: int, m: int, d: int, n: int,
                        selector: SpanSelector | None = None,
                        budget: Budget | None = None) -> tuple[BlockSequence, int] | None:
    """Canonically least witness sequence and its color, or None."""
    if d > m or k > l:
        raise SpanError("need d <= m and k <= l")
    for B in enumerate_block_sequences(l, n, m):
        if budget is not None:
            budget.tick()
        if selector is not None:
            color = span_monochromatic(coloring, B, selector=selector, d=d)
        else:
            color = span_monochromatic(coloring, B, k=k, d=d)
        if color is not None:
            return B, color
    return None


def min_gowers(k: int, l: int, m: int, d: int, r: int,
               selector: SpanSelector | None = None, workers: int = 1,
               budget: Budget | None = None) -> MinResult:
    return _scan_min(
        lambda n: verify_gowers(k, l, m, d, r, n, selector, workers, budget), m, budget)


def probe_neighbour_span(coloring: Coloring, k: int, lows, m: int, n: int,
                         budget: Budget | None = None) -> tuple[BlockSequence, int] | None:
    """Exploratory finite probe: least length-m sequence in FIN_k(n) whose
    span under the neighbour selector prod {0, l_j, l_j+1} is
    monochromatic.  No finite guarantee is claimed."""
    sel = neighbour_selector(k, lows)
    return find_gowers_witness(coloring, k, k, m, 1, n, selector=sel, budget=budget)


# ---------------------------------------------------------------------------
# classical Ramsey


def verify_ramsey(k: int, l: int, r: int, N: int, workers: int = 1,
                  budget: Budget | None = None) -> SearchOutcome:
    """Does every r-coloring of the k-subsets of [N] admit an l-set with
    all k-subsets one color?"""
    if k > l:
        raise SpanError("need k <= l")
    domain = list(combinations(range(1, N + 1), k))
    index = _index_map(domain)
    witnesses = []
    for X in combinations(range(1, N + 1), l):
        group = [index[S] for S in combinations(X, k)]
        witnesses.append([group])
    return _verify(domain, witnesses, r, N, workers, budget)


def min_classical_ramsey(k: int, l: int, r: int, workers: int = 1,
                         budget: Budget | None = None) -> MinResult:
    return _scan_min(lambda N: verify_ramsey(k, l, r, N, workers, budget), k, budget)


# ---------------------------------------------------------------------------
# type homogeneity


def fin_elements_over(A: BlockSequence, k: int) -> list[FinElement]:
    """FIN_k(A): weighted sums over the blocks of A attaining k."""
    if A.level != 1:
        raise SpanError("base sequence must have level 1")
    out = []
    for weights in product(range(k + 1), repeat=len(A)):
        if k not in weights:
            continue
        total = zero_element(k, A.width)
        for w, a in zip(weights, A):
            if w:
                total = partial_add(total, FinElement(k, tuple(w * x for x in a.values)))
        out.append(total)
    return out


def fin_sequences_over(A: BlockSequence, k: int, d: int) -> list:
    elems = fin_elements_over(A, k)
    if d == 1:
        return elems
    return sequences_from(elems, d)


def _type_classes(objs: list) -> dict:
    classes: dict = {}
    for obj in objs:
        if isinstance(obj, BlockSequence):
            key = tuple(t.serialize() for t in type_of_sequence(obj)[0])
        else:
            key = type_of(obj).type.serialize()
        classes.setdefault(key, []).append(obj)
    return classes


def find_type_homogeneous(coloring: Coloring, k: int, m: int, d: int, n: int,
                          budget: Budget | None = None) -> BlockSequence | None:
    """Least length-m level-1 sequence A in width n such that the coloring
    factors through the type on FIN_k^{[d]}(A)."""
    if d > m:
        raise SpanError("need d <= m")
    for A in enumerate_block_sequences(1, n, m):
        if budget is not None:
            budget.tick()
        if _is_type_homogeneous(coloring, A, k, d):
            return A
    return None


def _is_type_homogeneous(coloring: Coloring, A: BlockSequence, k: int, d: int) -> bool:
    for members in _type_classes(fin_sequences_over(A, k, d)).values():
        colors = {coloring.color_of(obj) for obj in members}
        if len(colors) > 1:
            return False
    return True


def verify_type_homogeneous(k: int, m: int, d: int, r: int, n: int, workers: int = 1,
                            budget: Budget | None = None) -> SearchOutcome:
    if d > m:
        raise SpanError("need d <= m")
    pool: dict = {}
    candidates = []
    for A in enumerate_block_sequences(1, n, m):
        classes = _type_classes(fin_sequences_over(A, k, d))
        candidates.append(list(classes.values()))
        for members in classes.values():
            for obj in members:
                pool[obj] = None
    domain = sorted(pool, key=lambda o: o.sort_key())
    index = _index_map(domain)
    witnesses = [[[index[o] for o in members] for members in classes]
                 for classes in candidates]
    return _verify(domain, witnesses, r, n, workers, budget)


def min_type_homogeneous(k: int, m: int, d: int, r: int, workers: int = 1,
                         budget: Budget | None = None) -> MinResult:
    return _scan_min(
        lambda n: verify_type_homogeneous(k, m, d, r, n, workers, budget), m, budget)


# ---------------------------------------------------------------------------
# size-insensitivity


@dataclass(frozen=True)
class SetTuple:
    """A choice of one bounded subset of [N] per ground index."""

    assignments: tuple[tuple[int, ...], ...]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, a in enumerate(self.assignments) if a)

    def total_size(self) -> int:
        return sum(len(a) for a in self.assignments)

    def serialize(self) -> str:
        parts = ["[" + ",".join(str(x) for x in a) + "]" for a in self.assignments]
        return "sets:(" + ";".join(parts) + ")"


@dataclass(frozen=True)
class SetTupleSeq:
    """A block-ordered tuple of SetTuples (supports strictly separated)."""

    items: tuple[SetTuple, ...]

    def total_size(self) -> int:
        return sum(it.total_size() for it in self.items)

    def serialize(self) -> str:
        return "|".join(it.serialize() for it in self.items)


def _set_tuples(N: int, ks) -> list[SetTuple]:
    axes = []
    for k_i in ks:
        options = [()]
        for size in range(1, k_i + 1):
            options.extend(combinations(range(1, N + 1), size))
        axes.append(options)
    return [SetTuple(tuple(choice)) for choice in product(*axes)]


def size_insens_domain(N: int, ks, d: int) -> list:
    singles = _set_tuples(N, ks)
    if d == 1:
        return singles
    nonempty = [f for f in singles if f.support]
    out = []

    def extend(prefix: list[SetTuple], prev_max: int, remaining: int):
        if remaining == 0:
            out.append(SetTupleSeq(tuple(prefix)))
            return
        for f in nonempty:
            supp = f.support
            if supp[0] > prev_max:
                prefix.append(f)
                extend(prefix, supp[-1], remaining - 1)
                prefix.pop()

    extend([], 0, d)
    return out


def _size_class_key(obj) -> tuple:
    if isinstance(obj, SetTuple):
        return tuple((i, len(a)) for i, a in enumerate(obj.assignments))
    return tuple(_size_class_key(it) for it in obj.items)


def _restricted_classes(domain: list, Bs: tuple[tuple[int, ...], ...]) -> dict:
    sets = [frozenset(B) for B in Bs]

    def inside(f: SetTuple) -> bool:
        return all(set(a) <= sets[i] for i, a in enumerate(f.assignments))

    classes: dict = {}
    for obj in domain:
        items = obj.items if isinstance(obj, SetTupleSeq) else (obj,)
        if all(inside(f) for f in items):
            classes.setdefault(_size_class_key(obj), []).append(obj)
    return classes


def find_size_insensitive(coloring: Coloring, m: int, ks, ls, N: int, d: int = 1,
                          budget: Budget | None = None):
    """Least tuple (B_1..B_m) of subsets of [N] with |B_i| = l_i on which
    the coloring depends only on support patterns and cardinalities."""
    domain = size_insens_domain(N, ks, d)
    for Bs in product(*(combinations(range(1, N + 1), l_i) for l_i in ls)):
        if budget is not None:
            budget.tick()
        ok = True
        for members in _restricted_classes(domain, Bs).values():
            if len({coloring.color_of(obj) for obj in members}) > 1:
                ok = False
                break
        if ok:
            return Bs
    return None


def verify_size_insensitive(m: int, ks, ls, r: int, N: int, d: int = 1,
                            workers: int = 1, budget: Budget | None = None) -> SearchOutcome:
    domain = size_insens_domain(N, ks, d)
    index = _index_map(domain)
    witnesses = []
    for Bs in product(*(combinations(range(1, N + 1), l_i) for l_i in ls)):
        groups = [[index[o] for o in members]
                  for members in _restricted_classes(domain, Bs).values()]
        witnesses.append(groups)
    return _verify(domain, witnesses, r, N, workers, budget)


def min_size_insensitive(m: int, ks, ls, r: int, d: int = 1, workers: int = 1,
                         budget: Budget | None = None) -> MinResult:
    start = max([1, *ls])
    return _scan_min(
        lambda N: verify_size_insensitive(m, ks, ls, r, N, d, workers, budget),
        start, budget)
