"""Balanced allocations on the stabilized graph via surplus-equalizing dynamics.

Once a blocking set has been removed, an allocation of the matching
number that covers every remaining edge can be driven to a state where,
for every remaining edge ij, the best outside option of i against j
equals that of j against i.  With a maximum matching this is exactly the
per-edge Nash split relative to outside options.

The driver alternates two moves, both exact over rationals:

  * a local transfer between the worst unbalanced pair, which never
    raises the top unbalanced surplus and shrinks the set of pairs
    sitting at it; and
  * an acceleration LP that pushes every surplus outside the frozen top
    group as low as possible, forcing the frozen group to grow.

Work is capped at |E'| LP solves and |E'|^2 transfers; exceeding either
cap signals an implementation bug, never an input problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from . import exactlp
from .blockset import BlockingSetResult
from .errors import InternalInvariantError, PreconditionError
from .graphcore import Edge, Graph, edge_key
from .matching import matching_number, max_matching

_Z = Fraction(0)

Pair = tuple[str, str]


@dataclass(frozen=True)
class SurplusTerm:
    """One candidate outside option: a constant minus an allocation sum.

    Ordinary terms are 1 - x_i - x_k for an edge ik; a vertex with no
    alternative neighbour gets the degenerate term 0 - x_i.
    """

    constant: int
    members: tuple[str, ...]

    def value(self, x: Mapping[str, Fraction]) -> Fraction:
        return self.constant - sum((x[m] for m in self.members), _Z)


@dataclass(frozen=True)
class SurplusState:
    """All directed surpluses of an allocation plus the derived quantities.

    s[(i, j)] is the best outside option of i ignoring j; term[(i, j)]
    records which option attains it (ties: smallest neighbour).  s_max is
    the largest surplus among unbalanced pairs (None when balanced),
    upper_pairs the pairs strictly above it, level_pairs those exactly at
    it, and delta_cap the smallest surplus inside upper_pairs (0 when
    empty).
    """

    graph: Graph
    x: dict[str, Fraction]
    s: dict[Pair, Fraction]
    term: dict[Pair, SurplusTerm]
    violated: tuple[Pair, ...]
    s_max: Fraction | None
    upper_pairs: frozenset[Pair]
    level_pairs: frozenset[Pair]
    delta_cap: Fraction

    def level_edges(self) -> frozenset[Edge]:
        return frozenset(edge_key(i, j) for i, j in self.level_pairs)

    def upper_edges(self) -> frozenset[Edge]:
        return frozenset(edge_key(i, j) for i, j in self.upper_pairs)


def surpluses(g: Graph, x: Mapping[str, Fraction]) -> SurplusState:
    """Evaluate every directed surplus of adjacent pairs under x."""
    if set(x) != set(g.vertices):
        raise PreconditionError("allocation must be defined on every vertex")
    xs = {v: Fraction(x[v]) for v in g.vertices}
    s: dict[Pair, Fraction] = {}
    term: dict[Pair, SurplusTerm] = {}
    for u, v in g.edges:
        for i, j in ((u, v), (v, u)):
            best: SurplusTerm | None = None
            best_val: Fraction | None = None
            for k in g.neighbors(i):
                if k == j:
                    continue
                cand = SurplusTerm(1, (i, k))
                val = cand.value(xs)
                if best_val is None or val > best_val:
                    best, best_val = cand, val
            if best is None:
                best = SurplusTerm(0, (i,))
                best_val = best.value(xs)
            s[(i, j)] = best_val
            term[(i, j)] = best

    violated = tuple(
        sorted((p for p in s if s[p] > s[(p[1], p[0])]), key=lambda p: (-s[p], p))
    )
    if violated:
        s_max = s[violated[0]]
        upper = frozenset(p for p in s if s[p] > s_max)
        level = frozenset(p for p in s if s[p] == s_max)
        delta = min((s[p] for p in upper), default=_Z)
    else:
        s_max = None
        upper = frozenset()
        level = frozenset()
        delta = _Z
    return SurplusState(
        graph=g,
        x=xs,
        s=s,
        term=term,
        violated=violated,
        s_max=s_max,
        upper_pairs=upper,
        level_pairs=level,
        delta_cap=delta,
    )


def maschler_shift(st: SurplusState, diagnostics: list[str] | None = None) -> dict[str, Fraction]:
    """Transfer half the surplus difference along the worst unbalanced pair.

    The recipient is the pair (i, j) with the largest surplus, smallest
    pair id on ties.  After the move the four exactness clauses are
    asserted: the pair balances at s_max - mu; the top unbalanced surplus
    never rises and the set at the old level shrinks when it stays; all
    pairs frozen above keep their surpluses and defining-option values;
    the allocation total and the unit cover of every edge survive.
    """
    if not st.violated:
        raise PreconditionError("no unbalanced pair to shift")
    i, j = st.violated[0]
    mu = (st.s[(i, j)] - st.s[(j, i)]) / 2
    if mu <= 0:
        raise InternalInvariantError("transfer amount must be positive")
    x2 = dict(st.x)
    x2[i] += mu
    x2[j] -= mu
    if diagnostics is not None and any(val < 0 for val in x2.values()):
        diagnostics.append(f"allocation dipped negative after transfer on ({i},{j})")

    after = surpluses(st.graph, x2)
    s0 = st.s_max
    if after.s[(i, j)] != s0 - mu or after.s[(j, i)] != s0 - mu:
        raise InternalInvariantError("shifted pair did not balance at s_max - mu")
    if after.s_max is not None:
        if after.s_max > s0:
            raise InternalInvariantError("top unbalanced surplus increased")
        if after.s_max == s0 and not len(after.level_edges()) < len(st.level_edges()):
            raise InternalInvariantError("level set failed to shrink at constant s_max")
    for p in st.upper_pairs:
        if after.s[p] != st.s[p]:
            raise InternalInvariantError(f"frozen pair {p} changed surplus")
        if st.term[p].value(x2) != st.term[p].value(st.x):
            raise InternalInvariantError(f"frozen pair {p} changed defining-option value")
    if sum(x2.values(), _Z) != sum(st.x.values(), _Z):
        raise InternalInvariantError("transfer changed the allocation total")
    for u, v in st.graph.edges:
        if x2[u] + x2[v] < 1:
            raise InternalInvariantError(f"transfer uncovered edge {u}-{v}")
    return x2


def _var(v: str) -> str:
    return f"y {v}"


def build_delta_lp(st: SurplusState) -> exactlp.LpProblem:
    """Acceleration LP: push all surpluses outside the frozen group down by delta.

    Constraint families, in construction order: total conservation;
    frozen defining-option values; defining-option dominance inside the
    frozen group; a delta-gap cap on every outside option of every
    unfrozen pair; unit cover of every edge.  The current allocation
    with delta = delta_cap - s_max is feasible by construction (asserted).
    """
    g = st.graph
    names = [_var(v) for v in g.vertices] + ["delta"]
    lp = exactlp.LpProblem("surplus-acceleration", "max", names)
    lp.set_objective({"delta": 1})
    total = sum(st.x.values(), _Z)
    lp.add_constraint({_var(v): 1 for v in g.vertices}, exactlp.EQ, total, name="total")

    frozen = sorted(st.upper_pairs)
    seen_freeze: set[tuple] = set()
    for i, j in frozen:
        t = st.term[(i, j)]
        key = (t.constant, tuple(sorted(t.members)))
        if key in seen_freeze:
            continue
        seen_freeze.add(key)
        lp.add_constraint(
            {_var(m): 1 for m in t.members},
            exactlp.EQ,
            sum((st.x[m] for m in t.members), _Z),
            name=f"freeze {' '.join(t.members)}",
        )
    for i, j in frozen:
        t = st.term[(i, j)]
        # value(term) >= 1 - y(e) for every alternative edge e at i
        for k in g.neighbors(i):
            if k == j:
                continue
            coeffs: dict[str, Fraction] = {}
            for m in t.members:
                coeffs[_var(m)] = coeffs.get(_var(m), _Z) - 1
            for m in (i, k):
                coeffs[_var(m)] = coeffs.get(_var(m), _Z) + 1
            coeffs = {k2: c for k2, c in coeffs.items() if c}
            lp.add_constraint(coeffs, exactlp.GE, 1 - t.constant, name=f"dominate {i} {j} {k}")

    seen_caps: set[tuple] = set()
    for u, v in g.edges:
        for i, j in ((u, v), (v, u)):
            if (i, j) in st.upper_pairs:
                continue
            options: list[SurplusTerm] = [
                SurplusTerm(1, (i, k)) for k in g.neighbors(i) if k != j
            ]
            if not options:
                options = [SurplusTerm(0, (i,))]
            for t in options:
                key = (t.constant, tuple(sorted(t.members)))
                if key in seen_caps:
                    continue
                seen_caps.add(key)
                coeffs = {_var(m): -1 for m in t.members}
                coeffs["delta"] = Fraction(1)
                lp.add_constraint(
                    coeffs, exactlp.LE, st.delta_cap - t.constant,
                    name=f"cap {t.constant} {' '.join(t.members)}",
                )
    for u, v in g.edges:
        lp.add_constraint({_var(u): 1, _var(v): 1}, exactlp.GE, 1, name=f"cover {u} {v}")

    delta0 = st.delta_cap - st.s_max if st.s_max is not None else _Z
    candidate = {_var(v): st.x[v] for v in g.vertices}
    candidate["delta"] = delta0
    _assert_lp_feasible(lp, candidate)
    return lp


def _assert_lp_feasible(lp: exactlp.LpProblem, point: Mapping[str, Fraction]) -> None:
    for con in lp.constraints:
        lhs = sum((c * point[v] for v, c in con.coeffs.items()), _Z)
        ok = (
            lhs <= con.rhs
            if con.rel == exactlp.LE
            else lhs >= con.rhs if con.rel == exactlp.GE else lhs == con.rhs
        )
        if not ok:
            raise InternalInvariantError(
                f"current allocation infeasible for acceleration LP at {con.name}"
            )
    if any(point[v] < 0 for v in lp.variables):
        raise InternalInvariantError("current allocation violates nonnegativity")


@dataclass
class PrekernelRun:
    allocation: dict[str, Fraction] = field(default_factory=dict)
    lp_solves: int = 0
    shifts: int = 0
    rounds: int = 0
    trace: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def _prekernel_run(g: Graph, x0: Mapping[str, Fraction]) -> PrekernelRun:
    run = PrekernelRun()
    x = {v: Fraction(x0[v]) for v in g.vertices}
    _check_start(g, x)
    m = g.m
    total0 = sum(x.values(), _Z)

    st = surpluses(g, x)
    while st.violated:
        run.rounds += 1
        run.lp_solves += 1
        if run.lp_solves > m:
            raise InternalInvariantError("LP-solve cap |E'| exceeded")
        round_shifts = 0
        s_str = f"{st.s_max.numerator}/{st.s_max.denominator}"

        sol = exactlp.solve(build_delta_lp(st))
        if sol.status != exactlp.OPTIMAL:
            raise InternalInvariantError(f"acceleration LP not optimal: {sol.status}")
        y = {v: sol.values[_var(v)] for v in g.vertices}
        st_y = surpluses(g, y)
        if st_y.violated:
            if st_y.s_max > st.s_max:
                raise InternalInvariantError("acceleration raised the top unbalanced surplus")
            if not st.upper_pairs <= st_y.upper_pairs:
                raise InternalInvariantError("acceleration lost frozen pairs")

        if st_y.violated and st_y.upper_pairs == st.upper_pairs:
            # no new frozen pairs: transfer locally until the level drops
            target = st_y.s_max
            cur = st_y
            feasible_push = st_y.delta_cap - st_y.s_max
            while cur.violated and cur.s_max == target:
                x2 = maschler_shift(cur, run.diagnostics)
                run.shifts += 1
                round_shifts += 1
                if round_shifts > m:
                    raise InternalInvariantError("per-round transfer cap |E'| exceeded")
                if run.shifts > m * m:
                    raise InternalInvariantError("total transfer cap |E'|^2 exceeded")
                cur = surpluses(g, x2)
                if cur.violated and cur.upper_pairs == st_y.upper_pairs:
                    # with the frozen group unchanged, the feasible push never shrinks
                    push = cur.delta_cap - cur.s_max
                    if push < feasible_push:
                        raise InternalInvariantError("feasible push decreased along transfers")
                    feasible_push = push
            if cur.violated and not st_y.upper_pairs < cur.upper_pairs:
                raise InternalInvariantError("frozen group failed to grow after transfers")
            st = cur
        else:
            st = st_y

        run.trace.append(
            f"round={run.rounds} s={s_str} |S|={len(st.upper_pairs)} "
            f"|I|={len(st.level_pairs)} shifts={round_shifts}"
        )

    x = st.x
    if sum(x.values(), _Z) != total0:
        raise InternalInvariantError("dynamics changed the allocation total")
    for u, v in g.edges:
        if x[u] + x[v] < 1:
            raise InternalInvariantError(f"final allocation uncovers {u}-{v}")
        if st.s[(u, v)] != st.s[(v, u)]:
            raise InternalInvariantError(f"final surpluses unbalanced on {u}-{v}")
    negative = [v for v in g.vertices if x[v] < 0]
    if negative:
        raise InternalInvariantError(f"final allocation negative at {negative}")
    run.allocation = x
    return run


def _check_start(g: Graph, x: Mapping[str, Fraction]) -> None:
    if any(x[v] < 0 for v in g.vertices):
        raise PreconditionError("starting allocation must be nonnegative")
    for u, v in g.edges:
        if x[u] + x[v] < 1:
            raise PreconditionError(f"starting allocation uncovers {u}-{v}")


def prekernel(g: Graph, x0: Mapping[str, Fraction]) -> dict[str, Fraction]:
    """Balance all directed surpluses over the edges of g, exactly.

    The start must cover every edge.  The returned allocation preserves
    the start's total and satisfies s_ij = s_ji on every edge.
    """
    return _prekernel_run(g, x0).allocation


@dataclass(frozen=True)
class BalancedOutcome:
    """Maximum matching plus an allocation balanced against outside options."""

    matching: tuple[Edge, ...]
    allocation: dict[str, Fraction]
    alternatives: dict[str, Fraction]
    cover_ok: dict[Edge, bool]
    balance_residual: dict[Edge, Fraction]
    lp_solves: int
    shifts: int
    trace: tuple[str, ...]
    diagnostics: tuple[str, ...]


def balanced_outcome(g: Graph, result: BlockingSetResult) -> BalancedOutcome:
    """Run the full pipeline tail: residual graph, matching, balancing.

    The stabilization allocation is topped up to the matching number of
    the original graph (deficit onto the lexicographically smallest
    vertex, which can only help coverage), then balanced on the residual
    graph.
    """
    blocked = set(result.blocking_set)
    gprime = g.without_edges(blocked)
    nu = matching_number(g)

    x0 = {v: Fraction(result.x_hat.get(v, 0)) for v in g.vertices}
    total = sum(x0.values(), _Z)
    if total > nu:
        raise PreconditionError("stabilized allocation exceeds the matching number")
    if total < nu and g.vertices:
        x0[g.vertices[0]] += nu - total

    mprime = max_matching(gprime)
    run = _prekernel_run(gprime, x0)
    x = run.allocation

    matched_with = {}
    for u, v in mprime.edges:
        matched_with[u] = v
        matched_with[v] = u
    alternatives: dict[str, Fraction] = {}
    for v in gprime.vertices:
        options = [
            1 - x[w]
            for w in gprime.neighbors(v)
            if matched_with.get(v) != w
        ]
        alternatives[v] = max(options) if options else _Z

    cover_ok = {e: x[e[0]] + x[e[1]] >= 1 for e in gprime.edges}
    residual: dict[Edge, Fraction] = {}
    final = surpluses(gprime, x)
    for u, v in mprime.edges:
        lhs = x[u] - alternatives[u]
        rhs = x[v] - alternatives[v]
        residual[(u, v)] = lhs - rhs
        # the alternative-based balance must agree with surplus balance
        balanced_by_alpha = lhs == rhs
        balanced_by_surplus = final.s[(u, v)] == final.s[(v, u)]
        if balanced_by_alpha != balanced_by_surplus:
            raise InternalInvariantError(f"balance criteria disagree on {u}-{v}")
        if not balanced_by_alpha:
            raise InternalInvariantError(f"matching edge {u}-{v} left unbalanced")

    if sum(x.values(), _Z) > nu:
        raise InternalInvariantError("balanced allocation exceeds the matching number")
    if not all(cover_ok.values()):
        raise InternalInvariantError("balanced allocation uncovers a residual edge")

    return BalancedOutcome(
        matching=mprime.edges,
        allocation=x,
        alternatives=alternatives,
        cover_ok=cover_ok,
        balance_residual=residual,
        lp_solves=run.lp_solves,
        shifts=run.shifts,
        trace=tuple(run.trace),
        diagnostics=tuple(run.diagnostics),
    )
