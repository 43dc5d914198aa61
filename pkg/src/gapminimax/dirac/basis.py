"""B-spline radial bases on exponentially graded knots with Dirichlet ends."""
from __future__ import annotations

from dataclasses import dataclass, fields
from functools import cached_property

import numpy as np
from scipy.interpolate import BSpline

CONFIG_KEYS = ("r_max", "n_splines", "spline_order", "grading", "quad_order")


def graded_breakpoints(n_intervals: int, r_max: float, grading: float) -> np.ndarray:
    """``r_i = r_max * expm1(g i / m) / expm1(g)`` for ``i = 0..m``."""
    i = np.arange(n_intervals + 1)
    if grading == 0:
        return r_max * i / n_intervals
    return r_max * np.expm1(grading * i / n_intervals) / np.expm1(grading)


def _spline_family(breaks: np.ndarray, order: int) -> BSpline:
    t = np.concatenate([np.full(order - 1, breaks[0]), breaks, np.full(order - 1, breaks[-1])])
    return BSpline(t, np.eye(len(t) - order), order - 1, extrapolate=False)


@dataclass(frozen=True)
class QuadratureTables:
    """Basis values at the quadrature nodes, each function normalised in L2."""

    r: np.ndarray
    w: np.ndarray
    upper: np.ndarray
    d_upper: np.ndarray
    lower: np.ndarray
    d_lower: np.ndarray


@dataclass(frozen=True)
class RadialBasis:
    """Two-component B-spline basis on ``(0, r_max]``.

    ``spline_order`` is the B-spline order (polynomial degree plus one) of the
    upper component; the lower component uses order
    ``spline_order + lower_order_shift``.  By default the lower family lives
    on the upper breakpoints, so it contains the derivatives of the upper
    functions and has ``n_splines + lower_order_shift`` members.  Setting
    ``n_lower`` gives the lower family its own graded breakpoints with that
    many functions.  All functions vanish at both ends.

    Attributes:
        r_max: radial box size in units ``m = c = 1``.
        n_splines: functions per component.
        spline_order: B-spline order of the upper component.
        grading: exponential knot grading; 0 gives uniform knots.
        quad_order: Gauss-Legendre nodes per knot interval.
        lower_order_shift: order offset of the lower component.
        n_lower: lower-component size on separate breakpoints.
    """

    r_max: float = 80.0
    n_splines: int = 200
    spline_order: int = 7
    grading: float = 15.0
    quad_order: int = 10
    lower_order_shift: int = 1
    n_lower: int | None = None

    def __post_init__(self):
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")
        if self.spline_order < 2 or self.spline_order + self.lower_order_shift < 2:
            raise ValueError("spline orders must be at least 2")
        for n, k in ((self.n_splines, self.spline_order), (self.n_lower_, self.lower_order)):
            if n < k:
                raise ValueError(f"{n} splines of order {k}: need at least {k}")
        if self.quad_order < 1:
            raise ValueError("quad_order must be positive")

    @classmethod
    def from_config(cls, cfg: dict) -> "RadialBasis":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in cfg.items() if k in known})

    @property
    def n_lower_(self) -> int:
        if self.n_lower is None:
            return self.n_splines + self.lower_order_shift
        return self.n_lower

    @property
    def lower_order(self) -> int:
        return self.spline_order + self.lower_order_shift

    def breakpoints(self, n: int, order: int) -> np.ndarray:
        # n + 2 B-splines before the two end functions are dropped
        return graded_breakpoints(n - order + 3, self.r_max, self.grading)

    @cached_property
    def tables(self) -> QuadratureTables:
        bu = self.breakpoints(self.n_splines, self.spline_order)
        bl = bu if self.n_lower is None else self.breakpoints(self.n_lower, self.lower_order)
        edges = np.unique(np.concatenate([bu, bl]))
        x, w = np.polynomial.legendre.leggauss(self.quad_order)
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        r = ((0.5 * (lo + hi))[:, None] + half[:, None] * x).ravel()
        wr = (half[:, None] * w).ravel()
        out = []
        for breaks, order in ((bu, self.spline_order), (bl, self.lower_order)):
            fam = _spline_family(breaks, order)
            B = fam(r)[:, 1:-1]
            dB = fam.derivative()(r)[:, 1:-1]
            nrm = np.sqrt(np.einsum("p,pi,pi->i", wr, B, B))
            out += [B / nrm, dB / nrm]
        return QuadratureTables(r, wr, *out)

    def weighted_gram(self, weight: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``int B_i B_j weight`` for the upper and the lower family."""
        t = self.tables
        ww = (t.w * weight)[:, None]
        return (t.upper * ww).T @ t.upper, (t.lower * ww).T @ t.lower
