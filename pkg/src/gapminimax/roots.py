"""Safeguarded bisection/secant iteration for a decreasing scalar function."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class RootResult:
    root: float
    f_root: float
    bracket: tuple[float, float]
    iterations: int
    converged: bool


def decreasing_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float | None = None,
    f_hi: float | None = None,
    rel_tol: float = 1e-12,
    max_iter: int = 200,
) -> RootResult:
    """Find the sign change of ``f`` in ``[lo, hi]`` with ``f(lo) > 0 >= f(hi)``.

    Illinois-modified regula falsi; a bisection step is forced whenever two
    consecutive steps fail to halve the bracket.  Stops when the bracket is
    narrower than ``rel_tol * (1 + |x|)`` or ``f`` vanishes exactly.
    """
    f_lo = f(lo) if f_lo is None else f_lo
    f_hi = f(hi) if f_hi is None else f_hi
    if not (f_lo > 0 >= f_hi):
        raise ValueError(f"no sign change in [{lo}, {hi}]: f = ({f_lo}, {f_hi})")
    if f_hi == 0:
        return RootResult(hi, 0.0, (lo, hi), 0, True)

    side = 0
    slow = 0
    width = hi - lo
    it = 0
    x, fx = hi, f_hi
    while it < max_iter:
        if hi - lo <= rel_tol * (1.0 + abs(0.5 * (lo + hi))):
            break
        it += 1
        if slow >= 2:
            x = 0.5 * (lo + hi)
            slow = 0
        else:
            x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
            if not lo < x < hi:
                x = 0.5 * (lo + hi)
        fx = f(x)
        if fx == 0:
            return RootResult(x, 0.0, (x, x), it, True)
        if fx > 0:
            lo, f_lo = x, fx
            if side == 1:
                f_hi *= 0.5
            side = 1
        else:
            hi, f_hi = x, fx
            if side == -1:
                f_lo *= 0.5
            side = -1
        new_width = hi - lo
        slow = slow + 1 if new_width > 0.5 * width else 0
        width = new_width

    root = 0.5 * (lo + hi)
    converged = hi - lo <= rel_tol * (1.0 + abs(root))
    return RootResult(root, fx if root == x else f(root), (lo, hi), it, converged)
