"""Gap eigenvalues of ``s = q + v`` through the Schur-complement reduced form.

For a shift ``u`` above ``a = max s`` on ``D-`` the maximisation over
``D-`` is explicit: with ``A_u = u - S--`` the maximiser of
``y -> s[x + y] - u ||x + y||^2`` is ``L_u x = A_u^{-1} S-+ x`` and the
maximum is the reduced form

    G_u = S++ - u + S+- A_u^{-1} S-+ .

The k-th gap eigenvalue is the unique ``u`` at which the k-th eigenvalue of
the pencil ``(G_u, N_u)``, ``N_u = 1 + L_u^H L_u``, crosses zero.  That
eigenvalue is strictly decreasing in ``u``, which makes bracketing safe.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .forms import FormPair, to_block_coordinates, hermitize
from .roots import decreasing_root

log = logging.getLogger(__name__)

MAX_SHIFT_COND = 1e14
STATUS_OK = "converged"
STATUS_CEILING = "no k-th eigenvalue below b"
STATUS_MAXITER = "iteration limit reached"


class ShiftError(ValueError):
    pass


class CeilingError(RuntimeError):
    pass


class MinimaxAssumptionError(RuntimeError):
    """The minimax level does not lie above ``a``."""


@dataclass(frozen=True)
class SForm:
    """``S = Q + V`` in block coordinates with its lower edge ``a`` and ceiling ``b``."""

    S: np.ndarray
    n_plus: int
    a: float
    b: float
    b_surrogate: bool = False

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    @property
    def n_minus(self) -> int:
        return self.dim - self.n_plus

    @property
    def Spp(self):
        return self.S[: self.n_plus, : self.n_plus]

    @property
    def Spm(self):
        return self.S[: self.n_plus, self.n_plus:]

    @property
    def Smp(self):
        return self.S[self.n_plus:, : self.n_plus]

    @property
    def Smm(self):
        return self.S[self.n_plus:, self.n_plus:]

    @cached_property
    def minus_spectrum(self) -> np.ndarray:
        return sla.eigvalsh(self.Smm) if self.n_minus else np.empty(0)

    @cached_property
    def pencil_eigenvalues(self) -> np.ndarray:
        return sla.eigvalsh(self.S)

    @cached_property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.pencil_eigenvalues))))

    def shifted(self, c: float) -> "SForm":
        """The form ``S + c``; ``a`` and ``b`` move with it."""
        return SForm(self.S + c * np.eye(self.dim), self.n_plus, self.a + c, self.b + c,
                     self.b_surrogate)


def assemble_s(pair: FormPair, b: float | None = None) -> SForm:
    """Form ``S = Q + V`` in block coordinates and compute ``a``.

    ``b`` defaults to a surrogate one above the top pencil eigenvalue.  With
    no ``D-`` the lower edge is ``-inf`` and the problem is plain
    Rayleigh-Ritz.
    """
    if not pair.is_block:
        pair = to_block_coordinates(pair)
    S = hermitize(pair.Q + pair.V, "S")
    p = pair.n_plus
    if pair.n_minus:
        a = float(sla.eigvalsh(S[p:, p:])[-1])
    else:
        log.info("empty D-: lower edge a = -inf, falling back to Rayleigh-Ritz")
        a = -np.inf
    surrogate = b is None
    if surrogate:
        b = float(sla.eigvalsh(S)[-1]) + 1.0
    if not b > a:
        raise ValueError(f"ceiling b = {b} is not above a = {a}")
    return SForm(S, p, a, float(b), surrogate)


@dataclass(frozen=True)
class SchurReduction:
    u: float
    G: np.ndarray
    L: np.ndarray
    N: np.ndarray


def schur_reduce(s: SForm, u: float) -> SchurReduction:
    """Reduced form ``G_u``, maximiser map ``L_u`` and metric ``N_u`` at shift ``u``."""
    p = s.n_plus
    if s.n_minus == 0:
        return SchurReduction(u, s.Spp - u * np.eye(p), np.zeros((0, p)), np.eye(p))
    if not u - s.a > 1e-12 * (1.0 + abs(s.a)):
        raise ShiftError(f"shift below the essential lower edge a: u = {u!r}, a = {s.a!r}")
    cond = (u - s.minus_spectrum[0]) / (u - s.a)
    if cond > MAX_SHIFT_COND:
        raise ShiftError(f"shifted block too ill-conditioned (cond {cond:.2e}) at u = {u!r}")
    A = u * np.eye(s.n_minus) - s.Smm
    L = sla.cho_solve(sla.cho_factor(A), s.Smp)
    G = hermitize(s.Spp - u * np.eye(p) + s.Spm @ L)
    N = hermitize(np.eye(p) + L.conj().T @ L)
    return SchurReduction(u, G, L, N)


def phi(s: SForm, u: float, x_plus: np.ndarray, y_minus: np.ndarray) -> float:
    """``s[x + y] - u ||x + y||^2`` for ``x`` in ``D+`` and ``y`` in ``D-``."""
    z = np.concatenate([x_plus, y_minus])
    return float(np.real(z.conj() @ s.S @ z) - u * np.real(z.conj() @ z))


def level_l_k(s: SForm, u: float, k: int) -> float:
    """k-th eigenvalue of the pencil ``(G_u, N_u)``."""
    if not 1 <= k <= s.n_plus:
        raise IndexError(f"k = {k} outside 1..{s.n_plus}")
    red = schur_reduce(s, u)
    return float(sla.eigh(red.G, red.N, eigvals_only=True, subset_by_index=[k - 1, k - 1])[0])


def level_g_k(s: SForm, u: float, k: int) -> float:
    """k-th eigenvalue of ``G_u`` in the plain metric.

    Same sign as ``level_l_k`` (``N_u`` is positive definite, so the inertia
    agrees) but strictly decreasing in ``u`` with slope at most ``-1``.  The
    pencil value itself is not monotone: it tends to ``0+`` as ``u -> a``.
    """
    if not 1 <= k <= s.n_plus:
        raise IndexError(f"k = {k} outside 1..{s.n_plus}")
    red = schur_reduce(s, u)
    return float(sla.eigvalsh(red.G, subset_by_index=[k - 1, k - 1])[0])


@dataclass(frozen=True)
class MinimaxResult:
    k: int
    lambda_k: float
    multiplicity: int
    bracket: tuple[float, float]
    iterations: int
    schur_residual: float
    pencil_mu_k: float
    status: str = STATUS_OK
    assumption_iii: bool = True
    scan: tuple[tuple[float, float], ...] = field(default=(), repr=False)
    reference: float | None = None

    @property
    def below_ceiling(self) -> bool:
        return self.status != STATUS_CEILING

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda": self.lambda_k,
            "multiplicity": self.multiplicity,
            "mu_reference": self.pencil_mu_k,
            "iterations": self.iterations,
            "residual": self.schur_residual,
            "status": self.status,
        }


def full_pencil_eigenvalues(s: SForm) -> np.ndarray:
    """All eigenvalues of ``(S, I)`` in nondecreasing order."""
    return s.pencil_eigenvalues.copy()


def mu_k(s: SForm, k: int) -> float:
    """k-th pencil eigenvalue inside ``(a, b)``, or ``b`` if there is none."""
    ev = s.pencil_eigenvalues
    inside = ev[(ev > s.a) & (ev < s.b)]
    return float(inside[k - 1]) if k <= inside.size else s.b


def _scan_grid(a: float, lo: float, hi: float, n_geo: int, n_uni: int) -> np.ndarray:
    mid = a + 0.5 * (hi - a)
    if mid <= lo:
        return np.linspace(lo, hi, n_geo + n_uni)
    geo = a + (lo - a) * ((mid - a) / (lo - a)) ** np.linspace(0.0, 1.0, n_geo)
    uni = np.linspace(mid, hi, n_uni + 1)[1:]
    return np.concatenate([geo, uni])


def solve_lambda_k(
    s: SForm,
    k: int,
    *,
    rel_tol: float = 1e-12,
    max_iter: int = 200,
    n_geometric: int = 16,
    n_uniform: int = 16,
    reference: bool = True,
) -> MinimaxResult:
    """k-th minimax level in ``(a, b)``, the root of ``u -> l_k(T_u)``.

    The function is scanned on a geometric-then-uniform grid from ``a + d``
    to ``b - d`` up to its first nonpositive value, where
    ``d = max(1e-8 (1 + |a|), 1e-13 (a - min S--))``;
    the final bracket is refined by :func:`decreasing_root`.  If no sign
    change occurs the level is ``b`` (status :data:`STATUS_CEILING`), which
    is an error when ``b`` is only the surrogate ceiling.
    """
    if not 1 <= k <= s.n_plus:
        raise IndexError(f"k = {k} outside 1..{s.n_plus}")
    mu = mu_k(s, k) if reference else np.nan

    if s.n_minus == 0:
        lam = float(sla.eigvalsh(s.Spp)[k - 1])
        status = STATUS_OK
        if lam >= s.b:
            if s.b_surrogate:
                raise CeilingError("eigenvalue at or above search ceiling")
            lam, status = s.b, STATUS_CEILING
        return MinimaxResult(k, lam, 1, (lam, lam), 0, 0.0, mu, status)

    # keep the first shift inside the conditioning limit of schur_reduce
    delta = max(1e-8 * (1.0 + abs(s.a)), 1e-13 * (s.a - s.minus_spectrum[0]))
    lo, hi = s.a + delta, s.b - delta
    grid = _scan_grid(s.a, lo, hi, n_geometric, n_uniform)

    def f(u):
        return level_l_k(s, u, k)

    scan = []
    for u in grid:
        val = f(u)
        scan.append((float(u), val))
        if val <= 0:
            break
    iii = scan[0][1] >= 0 if k == 1 else level_l_k(s, lo, 1) >= 0
    if scan[0][1] <= 0:
        raise MinimaxAssumptionError(
            f"l_{k}(T_u) = {scan[0][1]:.3e} <= 0 just above a = {s.a:.6g}: the level is not above a"
        )
    if scan[-1][1] > 0:
        if s.b_surrogate:
            raise CeilingError("eigenvalue at or above search ceiling")
        return MinimaxResult(k, s.b, 1, (scan[-1][0], s.b), 0, 0.0, mu, STATUS_CEILING, iii,
                             tuple(scan))

    (u0, f0), (u1, f1) = scan[-2], scan[-1]
    res = decreasing_root(f, u0, u1, f0, f1, rel_tol=rel_tol, max_iter=max_iter)
    status = STATUS_OK if res.converged else STATUS_MAXITER
    return MinimaxResult(k, res.root, 1, res.bracket, res.iterations, abs(res.f_root), mu,
                         status, iii, tuple(scan))


def multiplicity(results: list[MinimaxResult], tol: float | None = None) -> list[int]:
    """Cardinality of the cluster of equal levels each result belongs to."""
    lams = [r.lambda_k for r in results]
    out = [1] * len(lams)
    start = 0
    for i in range(1, len(lams) + 1):
        if i < len(lams):
            t = tol if tol is not None else 1e-8 * (1.0 + abs(lams[i]))
            if abs(lams[i] - lams[i - 1]) <= t:
                continue
        for j in range(start, i):
            out[j] = i - start
        start = i
    return out


def solve_all(s: SForm, k_max: int, **opts) -> list[MinimaxResult]:
    """Levels ``k = 1..k_max`` with multiplicities filled in."""
    results = [solve_lambda_k(s, k, **opts) for k in range(1, k_max + 1)]
    w = multiplicity(results)
    return [replace(r, multiplicity=m) for r, m in zip(results, w)]


def gap_eigenvector(s: SForm, lam: float, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """``(x+, L x+)`` for the k-th level ``lam``; ``x+`` is N-normalised."""
    red = schur_reduce(s, lam)
    _, X = sla.eigh(red.G, red.N, subset_by_index=[k - 1, k - 1])
    x = X[:, 0]
    return x, red.L @ x


def _subspace_grid(n_plus: int, k: int, grid: int):
    """Orthonormal bases (as arrays of shape (m, n_plus, k)) of sampled subspaces."""
    if k == n_plus:
        return np.eye(n_plus)[None]
    if n_plus == 2 and k == 1:
        th = np.pi * np.arange(grid) / grid
        return np.stack([np.cos(th), np.sin(th)], axis=1)[:, :, None]
    if n_plus == 3:
        # Fibonacci lattice on the upper hemisphere: lines, or normals of planes
        i = np.arange(grid) + 0.5
        z = 1.0 - i / grid
        r = np.sqrt(1.0 - z * z)
        ang = np.pi * (1.0 + 5.0**0.5) * i
        dirs = np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)
        if k == 1:
            return dirs[:, :, None]
        bases = []
        for d in dirs:
            q, _ = np.linalg.qr(np.column_stack([d, np.eye(3)]))
            bases.append(q[:, 1:3])
        return np.array(bases)
    raise ValueError(f"no subspace grid for n_plus = {n_plus}, k = {k}")


def brute_force_minimax(s: SForm, k: int, grid: int = 10_000) -> float:
    """Grid minimum over k-dimensional ``V`` in ``D+`` of the top eigenvalue on ``V + D-``.

    Exhaustive oracle for ``n_plus <= 3`` and ``k <= 2`` on real forms.
    """
    if s.n_plus > 3 or k > 2 or k > s.n_plus or k < 1:
        raise ValueError("brute force limited to n_plus <= 3 and 1 <= k <= min(2, n_plus)")
    if np.iscomplexobj(s.S) and np.abs(s.S.imag).max() > 0:
        raise ValueError("brute force grid covers real subspaces only")
    S = np.real(s.S)
    p, m = s.n_plus, s.n_minus
    bases = _subspace_grid(p, k, grid)
    W = np.zeros((bases.shape[0], p + m, k + m))
    W[:, :p, :k] = bases
    W[:, p:, k:] = np.eye(m)
    restricted = np.einsum("gij,jl,glm->gim", W.transpose(0, 2, 1), S, W)
    top = np.linalg.eigvalsh(restricted)[:, -1]
    return float(top.min())


@dataclass(frozen=True)
class MonotonicityReport:
    passed: bool
    slacks: dict
    offending: list
    scale: float


def monotonicity_certificate(
    s: SForm, u: float, u2: float, lambda_1: float | None = None, tol: float = 1e-10
) -> MonotonicityReport:
    """Check the norm chain and difference bounds between shifts ``u < u2``.

    Matrix inequalities checked (smallest eigenvalue of each difference must
    be at least ``-tol * scale``)::

        N_u2 >= 1,  N_u >= N_u2,  ((u2-a)/(u-a))^2 N_u2 >= N_u,
        G_u - G_u2 >= (u2-u) N_u2,  (u2-u) N_u >= G_u - G_u2

    With ``lambda_1`` supplied, also checks that the sign of ``G_u`` agrees
    with ``lambda_1 - u`` whenever the two are farther apart than the
    tolerance.
    """
    if not s.a < u <= u2:
        raise ValueError("need a < u <= u2")
    r1, r2 = schur_reduce(s, u), schur_reduce(s, u2)
    eye = np.eye(s.n_plus)
    ratio = ((u2 - s.a) / (u - s.a)) ** 2
    dG = r1.G - r2.G
    diffs = {
        "N_u2 - I": r2.N - eye,
        "N_u - N_u2": r1.N - r2.N,
        "ratio*N_u2 - N_u": ratio * r2.N - r1.N,
        "dG - (u2-u)N_u2": dG - (u2 - u) * r2.N,
        "(u2-u)N_u - dG": (u2 - u) * r1.N - dG,
    }
    scale = s.scale * max(1.0, ratio)
    slacks = {name: float(sla.eigvalsh(hermitize(D))[0]) for name, D in diffs.items()}
    offending = [name for name, v in slacks.items() if v < -tol * scale]

    if lambda_1 is not None:
        gmin = float(sla.eigvalsh(r1.G)[0])
        slacks["min eig G_u"] = gmin
        band = tol * scale
        if lambda_1 - u > band and not gmin > -band:
            offending.append("lambda_1 > u but G_u not positive")
        if u - lambda_1 > band and not gmin < band:
            offending.append("lambda_1 < u but G_u nonnegative")
    return MonotonicityReport(not offending, slacks, offending, scale)


def is_strictly_decreasing(scan) -> bool:
    vals = [v for _, v in scan]
    return all(b < a for a, b in itertools.pairwise(vals))


def sign_changes(scan) -> int:
    """Number of sign changes (zero counts as non-positive) along a scan."""
    pos = [v > 0 for _, v in scan]
    return sum(a != b for a, b in itertools.pairwise(pos))
