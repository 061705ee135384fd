from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from xnet.errors import StructuralError
from xnet.lp import solve_lp


def test_textbook_maximum():
    res = solve_lp([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert res.status == "optimal" and res.value == 36
    assert res.x == (2, 6)
    assert sum(y * b for y, b in zip(res.duals, [4, 12, 18])) == 36
    assert res.duals == (0, Fraction(3, 2), 1)


def test_equality_and_ge_rows():
    # min x + y s.t. x + 2y = 4, x >= 1
    res = solve_lp([-1, -1], [[1, 2], [1, 0]], [4, 1], ["=", ">="])
    assert res.status == "optimal" and res.value == Fraction(-5, 2)
    assert res.x == (1, Fraction(3, 2))
    assert sum(y * b for y, b in zip(res.duals, [4, 1])) == res.value


def test_infeasible_and_unbounded():
    assert solve_lp([1], [[1], [1]], [1, 2], ["<=", ">="]).status == "infeasible"
    assert solve_lp([1, 0], [[-1, 1]], [1]).status == "unbounded"


def test_negative_rhs_and_bad_input():
    res = solve_lp([-1], [[-1]], [-3])  # -x <= -3
    assert res.value == -3
    with pytest.raises(StructuralError):
        solve_lp([1], [[1, 2]], [1])
    with pytest.raises(StructuralError):
        solve_lp([1], [[1]], [1], ["<"])


def test_beale_cycling_example_terminates():
    c = [Fraction(3, 4), -150, Fraction(1, 50), -6]
    A = [
        [Fraction(1, 4), -60, Fraction(-1, 25), 9],
        [Fraction(1, 2), -90, Fraction(-1, 50), 3],
        [0, 0, 1, 0],
    ]
    res = solve_lp(c, A, [0, 0, 1])
    assert res.status == "optimal" and res.value == Fraction(1, 20)


def test_redundant_equalities():
    res = solve_lp([1, 1], [[1, 1], [2, 2]], [2, 4], ["=", "="])
    assert res.status == "optimal" and res.value == 2


@given(st.integers(0, 2**32 - 1))
def test_matches_scipy_linprog(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 5), rng.integers(1, 5)
    A = rng.integers(-3, 6, size=(m, n))
    b = rng.integers(0, 10, size=m)
    c = rng.integers(-4, 6, size=n)
    res = solve_lp(c.tolist(), A.tolist(), b.tolist())
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * n, method="highs")
    if ref.status == 3:
        assert res.status == "unbounded"
        return
    assert ref.status == 0 and res.status == "optimal"
    assert float(res.value) == pytest.approx(-ref.fun, abs=1e-9)
    x = np.array([float(v) for v in res.x])
    assert np.all(A @ x <= b + 1e-12) and np.all(x >= 0)
    y = np.array([float(v) for v in res.duals])
    assert np.all(y >= 0) and np.all(A.T @ y >= c - 1e-12)
    assert sum(yi * bi for yi, bi in zip(res.duals, b.tolist())) == res.value
