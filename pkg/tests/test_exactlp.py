from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netbargain import exactlp
from netbargain.errors import PreconditionError

import lpbrute


def fractional_matching_lp(edges, vertices):
    names = [f"y {u} {v}" for u, v in edges]
    lp = exactlp.LpProblem("fm", "max", names)
    lp.set_objective({n: 1 for n in names})
    for w in vertices:
        coeffs = {f"y {u} {v}": 1 for u, v in edges if w in (u, v)}
        lp.add_constraint(coeffs, exactlp.LE, 1, name=f"deg {w}")
    return lp


def test_trivial_box_maximum():
    lp = exactlp.LpProblem("t", "max", ["y1", "y2"])
    lp.set_objective({"y1": 1, "y2": 1})
    lp.add_constraint({"y1": 1}, exactlp.LE, 1)
    lp.add_constraint({"y2": 1}, exactlp.LE, 1)
    s = exactlp.solve(lp)
    assert s.status == exactlp.OPTIMAL
    assert s.objective == 2
    assert s.values == {"y1": Fraction(1), "y2": Fraction(1)}
    assert exactlp.check_certificates(lp, s) == []


def test_k3_fractional_matching_half_point():
    lp = fractional_matching_lp([("a", "b"), ("a", "c"), ("b", "c")], "abc")
    s = exactlp.solve(lp)
    assert s.objective == Fraction(3, 2)
    assert set(s.values.values()) == {Fraction(1, 2)}
    assert exactlp.check_certificates(lp, s) == []
    # independently: best vertex of the polytope
    assert lpbrute.best_vertex_value(lp) == Fraction(3, 2)


def test_single_edge_matching_integral():
    lp = fractional_matching_lp([("u", "v")], "uv")
    s = exactlp.solve(lp)
    assert s.objective == 1
    assert s.values["y u v"] == 1


def test_perturbed_solution_flagged():
    lp = fractional_matching_lp([("a", "b"), ("a", "c"), ("b", "c")], "abc")
    s = exactlp.solve(lp)
    bad_values = dict(s.values)
    bad_values["y a b"] += Fraction(1, 1000)
    from dataclasses import replace

    perturbed = replace(s, values=bad_values)
    assert exactlp.check_certificates(lp, perturbed) != []


def test_infeasible_reports_farkas():
    lp = exactlp.LpProblem("inf", "min", ["x"])
    lp.add_constraint({"x": 1}, exactlp.LE, 1)
    lp.add_constraint({"x": 1}, exactlp.GE, 2)
    s = exactlp.solve(lp)
    assert s.status == exactlp.INFEASIBLE
    assert s.farkas is not None
    with pytest.raises(PreconditionError):
        exactlp.check_certificates(lp, s)


def test_unbounded():
    lp = exactlp.LpProblem("unb", "max", ["x"])
    lp.set_objective({"x": 1})
    s = exactlp.solve(lp)
    assert s.status == exactlp.UNBOUNDED


def test_equality_and_bounds():
    lp = exactlp.LpProblem("eq", "min", ["x", "y"])
    lp.set_objective({"x": 2, "y": 1})
    lp.add_constraint({"x": 1, "y": 1}, exactlp.EQ, 3)
    lp.set_bounds("y", lower=0, upper=2)
    s = exactlp.solve(lp)
    assert s.status == exactlp.OPTIMAL
    assert s.values == {"x": Fraction(1), "y": Fraction(2)}
    assert s.objective == 4
    assert exactlp.check_certificates(lp, s) == []
    assert "y" in s.defining_vars


def test_lower_bound_shift():
    lp = exactlp.LpProblem("lb", "min", ["x"])
    lp.set_objective({"x": 1})
    lp.set_bounds("x", lower=Fraction(5, 2))
    s = exactlp.solve(lp)
    assert s.values["x"] == Fraction(5, 2)
    assert s.objective == Fraction(5, 2)
    assert exactlp.check_certificates(lp, s) == []


def test_redundant_equalities_dropped():
    lp = exactlp.LpProblem("red", "min", ["x", "y"])
    lp.set_objective({"x": 1, "y": 1})
    lp.add_constraint({"x": 1, "y": 1}, exactlp.EQ, 2)
    lp.add_constraint({"x": 2, "y": 2}, exactlp.EQ, 4)
    s = exactlp.solve(lp)
    assert s.status == exactlp.OPTIMAL
    assert s.objective == 2
    assert exactlp.check_certificates(lp, s) == []


def test_determinism():
    lp = fractional_matching_lp([("a", "b"), ("a", "c"), ("b", "c"), ("c", "d")], "abcd")
    s1 = exactlp.solve(lp)
    s2 = exactlp.solve(lp)
    assert s1 == s2


def _tight_system_rank(lp, s):
    rows = []
    idx = {v: i for i, v in enumerate(lp.variables)}
    n = len(lp.variables)
    for con in lp.constraints:
        lhs = sum((c * s.values[v] for v, c in con.coeffs.items()), Fraction(0))
        if lhs == con.rhs:
            dense = [Fraction(0)] * n
            for v, c in con.coeffs.items():
                dense[idx[v]] = c
            rows.append(dense)
    for v in lp.variables:
        lo = lp.lower.get(v, Fraction(0))
        hi = lp.upper.get(v)
        if s.values[v] == lo or (hi is not None and s.values[v] == hi):
            dense = [Fraction(0)] * n
            dense[idx[v]] = Fraction(1)
            rows.append(dense)
    rank = 0
    for col in range(n):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = Fraction(1) / rows[rank][col]
        rows[rank] = [a * inv for a in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


@st.composite
def small_lps(draw):
    n = draw(st.integers(min_value=1, max_value=3))
    m = draw(st.integers(min_value=1, max_value=4))
    names = [f"v{i}" for i in range(n)]
    lp = exactlp.LpProblem("rand", draw(st.sampled_from(["min", "max"])), names)
    coeff = st.integers(min_value=-3, max_value=3)
    lp.set_objective({v: draw(coeff) for v in names})
    for _ in range(m):
        lp.add_constraint(
            {v: draw(coeff) for v in names},
            draw(st.sampled_from([exactlp.LE, exactlp.GE, exactlp.EQ])),
            draw(st.integers(min_value=-4, max_value=6)),
        )
    for v in names:
        lp.set_bounds(v, lower=0, upper=draw(st.integers(min_value=1, max_value=5)))
    return lp


@given(small_lps())
@settings(max_examples=120, deadline=None)
def test_random_lps_match_vertex_enumeration(lp):
    s = exactlp.solve(lp)
    best = lpbrute.best_vertex_value(lp)
    if s.status == exactlp.INFEASIBLE:
        assert best is None
    else:
        # bounded by the box, so never unbounded
        assert s.status == exactlp.OPTIMAL
        assert best is not None
        assert s.objective == best
        assert exactlp.check_certificates(lp, s) == []
        assert _tight_system_rank(lp, s) >= len(lp.variables)
