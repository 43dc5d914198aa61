"""Closed-form Dirac-Coulomb levels, a shooting cross-check and coupling regimes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def sommerfeld_oracle(nu: float, kappa: int, n_r: int) -> float:
    """Bound-state energy ``(1 + nu^2 / (n_r + sqrt(kappa^2 - nu^2))^2)^(-1/2)``."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    if nu >= abs(kappa):
        raise ValueError(f"level undefined for nu = {nu} >= |kappa| (overcritical channel)")
    if n_r < 0 or (kappa > 0 and n_r < 1):
        raise ValueError(f"n_r = {n_r} not allowed for kappa = {kappa}")
    g = math.sqrt(kappa * kappa - nu * nu)
    return (1.0 + nu * nu / (n_r + g) ** 2) ** -0.5


def radial_quantum_number(kappa: int, k: int) -> int:
    """``n_r`` of the k-th level (k >= 1) in channel ``kappa``."""
    return k - 1 if kappa < 0 else k


def _rhs(kappa, nu, E):
    def f(r, y):
        P, Q = y
        v = -nu / r
        return [-kappa * P / r + (E + 1.0 - v) * Q, kappa * Q / r - (E - 1.0 - v) * P]

    return f


def shooting_mismatch(nu: float, kappa: int, E: float, r0: float = 1e-6) -> float:
    """``sin`` of the angle between outward and inward solutions at the turning point.

    The outward solution starts from ``P ~ r^g``, ``Q ~ ((g + kappa)/nu) r^g``
    and the inward one from the decaying behaviour
    ``(P, Q) ~ (1 + E, -sqrt(1 - E^2)) exp(-sqrt(1 - E^2) r)``.  Zeros in
    ``E`` are the bound states.
    """
    g = math.sqrt(kappa * kappa - nu * nu)
    lam = math.sqrt(1.0 - E * E)
    r_match = max(nu / (1.0 - E), 1.0)
    r_inf = r_match + 40.0 / lam
    opts = dict(method="DOP853", rtol=1e-11, atol=1e-300)
    out = solve_ivp(_rhs(kappa, nu, E), (r0, r_match), [r0**g, (g + kappa) / nu * r0**g], **opts)
    inn = solve_ivp(_rhs(kappa, nu, E), (r_inf, r_match), [1.0 + E, -lam], **opts)
    Po, Qo = out.y[:, -1]
    Pi, Qi = inn.y[:, -1]
    return (Po * Qi - Pi * Qo) / math.hypot(Po, Qo) / math.hypot(Pi, Qi)


@lru_cache(maxsize=None)
def shooting_levels(nu: float, kappa: int, n_levels: int = 3, n_scan: int = 150) -> tuple:
    """Lowest ``n_levels`` bound-state energies found by shooting.

    The scan is uniform in ``log(1 - E)`` so that the levels crowding
    towards the gap edge are resolved.
    """
    if not 0 < nu < abs(kappa):
        raise ValueError("shooting requires 0 < nu < |kappa|")
    Es = 1.0 - np.geomspace(0.999, 1e-4, n_scan)
    vals = [shooting_mismatch(nu, kappa, E) for E in Es]
    roots = []
    for (e0, f0), (e1, f1) in zip(zip(Es, vals), zip(Es[1:], vals[1:])):
        if f0 == 0 or f0 * f1 < 0:
            roots.append(brentq(lambda E: shooting_mismatch(nu, kappa, E), e0, e1, xtol=1e-14))
            if len(roots) == n_levels:
                break
    return tuple(roots)


def _gls_threshold() -> float:
    return brentq(lambda g: 2 * g**3 - 3 * g**2 + 4 * g - 1, 0.0, 1.0, xtol=1e-15)


GLS_THRESHOLD = _gls_threshold()
TALMAN_THRESHOLD = 2.0 / (2.0 / math.pi + math.pi / 2.0)
CORE_THRESHOLD = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class CouplingRegime:
    """Which coupling thresholds ``nu`` satisfies; each flag is independent."""

    nu: float
    in_P1: bool
    talman_ok: bool
    core_regime: bool
    gls_regime: bool

    def to_dict(self) -> dict:
        return {
            "in_P1": self.in_P1,
            "talman_ok": self.talman_ok,
            "core_regime": self.core_regime,
            "gls_regime": self.gls_regime,
        }


def regime_classify(nu: float) -> CouplingRegime:
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    return CouplingRegime(
        nu=nu,
        in_P1=nu < 1.0,
        talman_ok=nu <= TALMAN_THRESHOLD,
        core_regime=nu <= CORE_THRESHOLD,
        gls_regime=nu <= GLS_THRESHOLD,
    )
