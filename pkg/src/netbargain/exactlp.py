"""Exact rational linear programming via two-phase primal simplex.

All arithmetic is over `Fraction`; there is no floating-point phase, so
callers can compare solution values against thresholds like 1/3 exactly.
The solver returns optimal *basic* solutions (vertices of the feasible
region), row duals, and the tight-set bookkeeping needed by callers that
reason about the defining system of an extreme point.

Pivoting uses Bland's rule over the canonical variable order, which
guarantees termination and makes every solve deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import PreconditionError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, EQ, GE = "<=", "=", ">="
_RELS = (LE, EQ, GE)

_Z = Fraction(0)
_ONE = Fraction(1)


@dataclass
class Constraint:
    coeffs: dict[str, Fraction]
    rel: str
    rhs: Fraction
    name: str


class LpProblem:
    """Linear program builder over named variables.

    Variables carry a finite lower bound (default 0) and an optional
    upper bound.  The variable order given at construction is the
    canonical order used for deterministic pivoting.
    """

    def __init__(self, name: str, sense: str, variables: Sequence[str]):
        if sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
        if len(set(variables)) != len(variables):
            raise ValueError("duplicate variable names")
        self.name = name
        self.sense = sense
        self.variables: tuple[str, ...] = tuple(variables)
        self._index = {v: i for i, v in enumerate(self.variables)}
        self.objective: dict[str, Fraction] = {}
        self.constraints: list[Constraint] = []
        self.lower: dict[str, Fraction] = {}
        self.upper: dict[str, Fraction] = {}

    def _check_vars(self, coeffs: Mapping[str, object]) -> dict[str, Fraction]:
        out: dict[str, Fraction] = {}
        for v, c in coeffs.items():
            if v not in self._index:
                raise ValueError(f"unknown variable {v!r}")
            c = Fraction(c)
            if c:
                out[v] = c
        return out

    def set_objective(self, coeffs: Mapping[str, object]) -> None:
        self.objective = self._check_vars(coeffs)

    def add_constraint(self, coeffs: Mapping[str, object], rel: str, rhs: object, name: str = "") -> int:
        if rel not in _RELS:
            raise ValueError(f"relation must be one of {_RELS}, got {rel!r}")
        self.constraints.append(Constraint(self._check_vars(coeffs), rel, Fraction(rhs), name))
        return len(self.constraints) - 1

    def set_bounds(self, var: str, lower: object = 0, upper: object | None = None) -> None:
        if var not in self._index:
            raise ValueError(f"unknown variable {var!r}")
        self.lower[var] = Fraction(lower)
        if upper is not None:
            up = Fraction(upper)
            if up < self.lower[var]:
                raise ValueError(f"empty bound interval for {var!r}")
            self.upper[var] = up
        else:
            self.upper.pop(var, None)

    def describe(self) -> str:
        """Deterministic human-readable dump, for debugging only."""
        obj = " + ".join(f"{c}*{v}" for v, c in sorted(self.objective.items())) or "0"
        lines = [f"{self.sense} {obj}"]
        for i, con in enumerate(self.constraints):
            lhs = " + ".join(f"{c}*{v}" for v, c in sorted(con.coeffs.items())) or "0"
            label = con.name or f"row{i}"
            lines.append(f"  [{label}] {lhs} {con.rel} {con.rhs}")
        for v in self.variables:
            lo = self.lower.get(v, _Z)
            hi = self.upper.get(v)
            lines.append(f"  {lo} <= {v}" + (f" <= {hi}" if hi is not None else ""))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LpSolution:
    """Solve result.

    `defining_rows` are the user constraints that participate in the
    full-rank tight system the simplex basis selects; together with
    `defining_vars` (variables pinned at a bound) they determine the
    returned point uniquely.  `duals` follow the convention under which
    the dual objective equals the primal one (see `check_certificates`).
    """

    status: str
    values: dict[str, Fraction] = field(default_factory=dict)
    objective: Fraction | None = None
    duals: tuple[Fraction, ...] = ()
    tight_rows: frozenset[int] = frozenset()
    defining_rows: frozenset[int] = frozenset()
    defining_vars: frozenset[str] = frozenset()
    farkas: tuple[Fraction, ...] | None = None


class _Tableau:
    """Dense simplex tableau over Fractions with Bland pivoting."""

    def __init__(self, rows: list[list[Fraction]], basis: list[int], ncols: int):
        self.rows = rows          # each row: ncols coefficients + rhs
        self.basis = basis
        self.ncols = ncols

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        inv = _ONE / row[c]
        prow = [a * inv for a in row]
        self.rows[r] = prow
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                self.rows[i] = [a - f * b for a, b in zip(other, prow)]
        self.basis[r] = c

    def run(self, costs: list[Fraction], banned: frozenset[int]) -> str:
        """Minimize `costs`; Bland's rule (lowest eligible index) throughout."""
        m = len(self.rows)
        while True:
            nonzero = [(i, costs[b]) for i, b in enumerate(self.basis) if costs[b]]
            basis_set = set(self.basis)
            enter = -1
            for j in range(self.ncols):
                if j in banned or j in basis_set:
                    continue
                cbar = costs[j]
                for i, cbi in nonzero:
                    cbar -= cbi * self.rows[i][j]
                if cbar < 0:
                    enter = j
                    break
            if enter < 0:
                return OPTIMAL
            leave = -1
            best_ratio: Fraction | None = None
            for i in range(m):
                t = self.rows[i][enter]
                if t > 0:
                    ratio = self.rows[i][-1] / t
                    if (
                        best_ratio is None
                        or ratio < best_ratio
                        or (ratio == best_ratio and self.basis[i] < self.basis[leave])
                    ):
                        best_ratio = ratio
                        leave = i
            if leave < 0:
                return UNBOUNDED
            self.pivot(leave, enter)

    def reduced_cost(self, costs: list[Fraction], j: int) -> Fraction:
        cbar = costs[j]
        for i, b in enumerate(self.basis):
            if costs[b]:
                cbar -= costs[b] * self.rows[i][j]
        return cbar


@dataclass
class _Row:
    coeffs: list[Fraction]
    rel: str
    rhs: Fraction
    user_index: int | None    # None for internal upper-bound rows
    ub_var: str | None
    flipped: bool = False
    slack_col: int = -1       # slack (<=) or surplus (>=) column
    art_col: int = -1
    dead: bool = False        # redundant row dropped after phase 1


def solve(p: LpProblem) -> LpSolution:
    """Solve to optimality, infeasibility, or unboundedness.

    When optimal, the returned point is a vertex of the feasible region,
    the duals satisfy complementary slackness, and repeated calls return
    the identical solution.
    """
    n = len(p.variables)
    lower = [p.lower.get(v, _Z) for v in p.variables]
    cost_user = [Fraction(p.objective.get(v, 0)) for v in p.variables]

    rows: list[_Row] = []
    for ui, con in enumerate(p.constraints):
        dense = [_Z] * n
        for v, c in con.coeffs.items():
            dense[p._index[v]] = c
        shift = sum((dense[j] * lower[j] for j in range(n)), _Z)
        rows.append(_Row(dense, con.rel, con.rhs - shift, ui, None))
    for j, v in enumerate(p.variables):
        if v in p.upper:
            dense = [_Z] * n
            dense[j] = _ONE
            rows.append(_Row(dense, LE, p.upper[v] - lower[j], None, v))

    for row in rows:
        if row.rhs < 0:
            row.coeffs = [-a for a in row.coeffs]
            row.rhs = -row.rhs
            row.rel = {LE: GE, GE: LE, EQ: EQ}[row.rel]
            row.flipped = True

    # column layout: structural | slack/surplus | artificial
    ncols = n
    for row in rows:
        if row.rel in (LE, GE):
            row.slack_col = ncols
            ncols += 1
    art_cols = []
    for row in rows:
        if row.rel in (GE, EQ):
            row.art_col = ncols
            art_cols.append(ncols)
            ncols += 1

    tab_rows: list[list[Fraction]] = []
    basis: list[int] = []
    owners: list[_Row] = []
    for row in rows:
        line = list(row.coeffs) + [_Z] * (ncols - n) + [row.rhs]
        if row.rel == LE:
            line[row.slack_col] = _ONE
            basis.append(row.slack_col)
        elif row.rel == GE:
            line[row.slack_col] = -_ONE
            line[row.art_col] = _ONE
            basis.append(row.art_col)
        else:
            line[row.art_col] = _ONE
            basis.append(row.art_col)
        tab_rows.append(line)
        owners.append(row)

    tab = _Tableau(tab_rows, basis, ncols)
    art_set = frozenset(art_cols)

    if art_cols:
        cost1 = [_Z] * ncols
        for c in art_cols:
            cost1[c] = _ONE
        status = tab.run(cost1, frozenset())
        if status != OPTIMAL:
            raise AssertionError("phase 1 cannot be unbounded")
        phase1_value = sum(
            (cost1[b] * tab.rows[i][-1] for i, b in enumerate(tab.basis)), _Z
        )
        if phase1_value > 0:
            farkas = tuple(
                _user_dual(tab, cost1, row, p.sense)
                for row in rows
                if row.user_index is not None
            )
            return LpSolution(status=INFEASIBLE, farkas=farkas)
        _drive_out_artificials(tab, owners, art_set)

    sense_factor = _ONE if p.sense == "min" else -_ONE
    cost2 = [c * sense_factor for c in cost_user] + [_Z] * (ncols - n)
    status = tab.run(cost2, art_set)
    if status == UNBOUNDED:
        return LpSolution(status=UNBOUNDED)

    shifted = [_Z] * n
    for i, b in enumerate(tab.basis):
        if b < n:
            shifted[b] = tab.rows[i][-1]
    values = {v: shifted[j] + lower[j] for j, v in enumerate(p.variables)}
    objective = sum((cost_user[j] * values[p.variables[j]] for j in range(n)), _Z)

    duals = tuple(
        _user_dual(tab, cost2, row, p.sense) for row in rows if row.user_index is not None
    )
    basis_set = set(tab.basis)
    tight, defining_rows = _tight_sets(p, rows, values, basis_set)
    defining_vars = _defining_vars(p, rows, basis_set, n)
    return LpSolution(
        status=OPTIMAL,
        values=values,
        objective=objective,
        duals=duals,
        tight_rows=tight,
        defining_rows=defining_rows,
        defining_vars=defining_vars,
    )


def _drive_out_artificials(tab: _Tableau, owners: list[_Row], art_set: frozenset[int]) -> None:
    """Pivot zero-valued basic artificials out; drop rows that turn out redundant."""
    for i in range(len(tab.rows)):
        if tab.basis[i] in art_set:
            target = -1
            for j in range(tab.ncols):
                if j not in art_set and tab.rows[i][j] != 0:
                    target = j
                    break
            if target >= 0:
                tab.pivot(i, target)
    dead = [i for i in range(len(tab.rows)) if tab.basis[i] in art_set]
    for i in reversed(dead):
        owners[i].dead = True
        del tab.rows[i]
        del tab.basis[i]
        del owners[i]


def _user_dual(tab: _Tableau, costs: list[Fraction], row: _Row, sense: str) -> Fraction:
    if row.dead:
        return _Z
    col = row.art_col if row.art_col >= 0 else row.slack_col
    y = -tab.reduced_cost(costs, col)
    if row.flipped:
        y = -y
    if sense == "max":
        y = -y
    return y


def _tight_sets(
    p: LpProblem,
    rows: list[_Row],
    values: dict[str, Fraction],
    basis_set: set[int],
) -> tuple[frozenset[int], frozenset[int]]:
    tight = set()
    defining = set()
    for row in rows:
        if row.user_index is None:
            continue
        con = p.constraints[row.user_index]
        lhs = sum((c * values[v] for v, c in con.coeffs.items()), _Z)
        if lhs == con.rhs:
            tight.add(row.user_index)
        if row.dead:
            continue
        if row.rel == EQ or row.slack_col not in basis_set:
            defining.add(row.user_index)
    return frozenset(tight), frozenset(defining)


def _defining_vars(p: LpProblem, rows: list[_Row], basis_set: set[int], n: int) -> frozenset[str]:
    pinned = {v for j, v in enumerate(p.variables) if j not in basis_set}
    for row in rows:
        if row.ub_var is not None and not row.dead and row.slack_col not in basis_set:
            pinned.add(row.ub_var)
    return frozenset(pinned)


def check_certificates(p: LpProblem, s: LpSolution) -> list[str]:
    """Exact verification of feasibility, strong duality, and complementary slackness.

    Returns the list of violated conditions; an optimal solve must yield
    an empty list.
    """
    if s.status != OPTIMAL:
        raise PreconditionError("check_certificates requires an optimal solution")
    out: list[str] = []
    vals = s.values
    for v in p.variables:
        x = vals.get(v)
        if x is None:
            out.append(f"missing value for {v}")
            return out
        lo = p.lower.get(v, _Z)
        hi = p.upper.get(v)
        if x < lo:
            out.append(f"{v} below lower bound: {x} < {lo}")
        if hi is not None and x > hi:
            out.append(f"{v} above upper bound: {x} > {hi}")

    slacks: list[Fraction] = []
    for i, con in enumerate(p.constraints):
        lhs = sum((c * vals[v] for v, c in con.coeffs.items()), _Z)
        slacks.append(lhs - con.rhs)
        ok = lhs <= con.rhs if con.rel == LE else lhs >= con.rhs if con.rel == GE else lhs == con.rhs
        if not ok:
            out.append(f"constraint {i} ({con.name or con.rel}) violated: {lhs} vs {con.rhs}")

    if len(s.duals) != len(p.constraints):
        out.append("dual vector length mismatch")
        return out

    is_min = p.sense == "min"
    for i, (con, y) in enumerate(zip(p.constraints, s.duals)):
        if con.rel == LE and ((is_min and y > 0) or (not is_min and y < 0)):
            out.append(f"dual sign violated on <= row {i}: {y}")
        if con.rel == GE and ((is_min and y < 0) or (not is_min and y > 0)):
            out.append(f"dual sign violated on >= row {i}: {y}")
        if y != 0 and slacks[i] != 0:
            out.append(f"complementary slackness violated on row {i}")

    dual_obj = sum((y * con.rhs for y, con in zip(s.duals, p.constraints)), _Z)
    for v in p.variables:
        c = Fraction(p.objective.get(v, 0))
        r = c - sum(
            (s.duals[i] * con.coeffs.get(v, _Z) for i, con in enumerate(p.constraints)), _Z
        )
        x = vals[v]
        lo = p.lower.get(v, _Z)
        hi = p.upper.get(v)
        at_lo = x == lo
        at_hi = hi is not None and x == hi
        if is_min:
            if r > 0 and not at_lo:
                out.append(f"reduced cost of {v} positive but not at lower bound")
            if r < 0 and not at_hi:
                out.append(f"reduced cost of {v} negative but not at upper bound")
        else:
            if r < 0 and not at_lo:
                out.append(f"reduced cost of {v} negative but not at lower bound")
            if r > 0 and not at_hi:
                out.append(f"reduced cost of {v} positive but not at upper bound")
        # a positive reduced cost pins the variable at a bound: the lower one
        # when minimizing, the upper one when maximizing (mirrored for negative)
        if r > 0:
            dual_obj += r * (lo if is_min else (hi if hi is not None else lo))
        elif r < 0:
            dual_obj += r * ((hi if hi is not None else lo) if is_min else lo)
    if s.objective != dual_obj:
        out.append(f"duality gap: primal {s.objective} vs dual {dual_obj}")
    return out
