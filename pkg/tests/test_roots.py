import math

import pytest
from hypothesis import given, strategies as st

from gapminimax.roots import decreasing_root


def test_linear_root():
    res = decreasing_root(lambda x: 2.0 - x, 0.0, 5.0)
    assert res.converged and res.root == pytest.approx(2.0, abs=1e-12)


def test_requires_sign_change():
    with pytest.raises(ValueError):
        decreasing_root(lambda x: 1.0 - x, 2.0, 3.0)


def test_exact_zero_at_hi():
    res = decreasing_root(lambda x: 1.0 - x, 0.0, 1.0)
    assert res.root == 1.0 and res.iterations == 0


def test_flat_then_steep_uses_bisection():
    # regula falsi alone stalls on this shape; the forced bisection keeps it linear
    res = decreasing_root(lambda x: 1e-9 - x**9, 0.0, 1.0, max_iter=200)
    assert res.converged and res.root == pytest.approx(1e-1, rel=1e-10)


@given(c=st.floats(-50, 50), s=st.floats(0.01, 100))
def test_root_of_decreasing_cubic(c, s):
    def f(x):
        return -s * (x - c) - (x - c) ** 3

    res = decreasing_root(f, c - 10, c + 10)
    assert abs(res.root - c) <= 1e-12 * (1 + abs(c)) * 10
    lo, hi = res.bracket
    assert lo <= res.root <= hi and res.iterations <= 200
    assert math.isfinite(res.f_root)
