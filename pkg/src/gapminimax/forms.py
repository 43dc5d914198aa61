"""Hermitian form pairs on a Galerkin space and the form-perturbation checks.

A :class:`FormPair` holds the Gram matrix ``M`` of the discretisation, the
unperturbed form ``Q`` and the perturbation ``V`` together with an orthogonal
splitting of the space into ``D+`` and ``D-``.  Everything downstream works
in *block coordinates*: coordinates in which ``M`` is the identity and the
first ``n_plus`` axes span ``D+``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

#: structural tolerance, relative to the spectral norm of Q
DEFAULT_TOL = 1e-10
#: condition (8) is tried for alpha in 1, 2, 4, ..., 2**10
ALPHA_GRID = tuple(2.0**i for i in range(11))
MAX_SPLIT_COND = 1e10


class FormError(ValueError):
    """Raised for inconsistent form data."""


class DegenerateSplitError(FormError):
    pass


class AlphaMetricError(FormError):
    pass


class MetricSingularError(FormError):
    pass


def hermitize(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Return ``(A + A^H) / 2`` and log the size of the correction."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise FormError(f"{name} must be square, got shape {A.shape}")
    if not np.iscomplexobj(A):
        A = A.astype(float)
    H = 0.5 * (A + A.conj().T)
    corr = np.linalg.norm(H - A)
    if corr > 0:
        log.debug("symmetrised %s, correction norm %.3e", name, corr)
    return H


@dataclass(frozen=True)
class SplitSpace:
    """Coordinates of bases of ``D+`` and ``D-`` as matrix columns."""

    basis_plus: np.ndarray
    basis_minus: np.ndarray

    def __post_init__(self):
        bp = np.atleast_2d(np.asarray(self.basis_plus))
        bm = np.atleast_2d(np.asarray(self.basis_minus))
        if bp.shape[0] != bm.shape[0]:
            raise FormError("basis_plus and basis_minus live in different spaces")
        if bp.shape[1] + bm.shape[1] != bp.shape[0]:
            raise FormError(
                f"split has {bp.shape[1]} + {bm.shape[1]} vectors in dimension {bp.shape[0]}"
            )
        object.__setattr__(self, "basis_plus", bp)
        object.__setattr__(self, "basis_minus", bm)

    @property
    def dim(self) -> int:
        return self.basis_plus.shape[0]

    @property
    def n_plus(self) -> int:
        return self.basis_plus.shape[1]

    @property
    def n_minus(self) -> int:
        return self.basis_minus.shape[1]

    @classmethod
    def from_indices(cls, dim: int, plus_indices: Sequence[int]) -> "SplitSpace":
        plus = sorted(set(int(i) for i in plus_indices))
        if any(i < 0 or i >= dim for i in plus):
            raise FormError(f"plus index out of range for dimension {dim}")
        minus = [i for i in range(dim) if i not in set(plus)]
        eye = np.eye(dim)
        return cls(eye[:, plus], eye[:, minus])

    @classmethod
    def leading(cls, dim: int, n_plus: int) -> "SplitSpace":
        """The split whose first ``n_plus`` coordinate axes span ``D+``."""
        eye = np.eye(dim)
        return cls(eye[:, :n_plus], eye[:, n_plus:])


@dataclass(frozen=True)
class FormPair:
    """Gram matrix ``M``, forms ``Q`` and ``V``, and a splitting of the space.

    ``transform`` is set by :func:`to_block_coordinates`; its columns are the
    block basis expressed in the original coordinates.
    """

    M: np.ndarray
    Q: np.ndarray
    V: np.ndarray
    split: SplitSpace
    transform: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        M = hermitize(self.M, "M")
        Q = hermitize(self.Q, "Q")
        V = hermitize(self.V, "V")
        n = M.shape[0]
        if Q.shape != (n, n) or V.shape != (n, n) or self.split.dim != n:
            raise FormError("M, Q, V and the split must share one dimension")
        try:
            sla.cholesky(M, lower=True)
        except np.linalg.LinAlgError as exc:
            raise FormError("M is not positive definite") from exc
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "V", V)

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    @property
    def n_plus(self) -> int:
        return self.split.n_plus

    @property
    def n_minus(self) -> int:
        return self.split.n_minus

    @property
    def is_block(self) -> bool:
        """True when ``M`` is the identity and the split is the leading one."""
        n, p = self.dim, self.n_plus
        eye = np.eye(n)
        return (
            np.array_equal(self.M, eye)
            and np.array_equal(self.split.basis_plus, eye[:, :p])
            and np.array_equal(self.split.basis_minus, eye[:, p:])
        )

    def blocks(self, A: np.ndarray):
        """``(A++, A+-, A-+, A--)`` of a matrix given in block coordinates."""
        p = self.n_plus
        return A[:p, :p], A[:p, p:], A[p:, :p], A[p:, p:]


def _orthonormal_columns(B: np.ndarray, M: np.ndarray) -> np.ndarray:
    # Cholesky-based M-orthonormalisation: B R^{-1} with R^H R = B^H M B
    if B.shape[1] == 0:
        return B.astype(M.dtype if np.iscomplexobj(M) else float)
    G = hermitize(B.conj().T @ M @ B)
    R = sla.cholesky(G, lower=False)
    # X R = B  <=>  R^T X^T = B^T
    return sla.solve_triangular(R, B.T, trans="T", lower=False).T


def to_block_coordinates(pair: FormPair) -> FormPair:
    """Congruence-transform ``pair`` so that ``M = I`` and ``D+`` comes first.

    ``D+`` keeps its span; ``D-`` is replaced by its component M-orthogonal
    to ``D+`` (a no-op for an orthogonal split).

    Raises
    ------
    DegenerateSplitError
        If the stacked split basis is singular or has an M-condition number
        above ``1e10``.
    """
    M = pair.M
    Bp, Bm = pair.split.basis_plus, pair.split.basis_minus
    L = sla.cholesky(M, lower=True)
    stacked = L.conj().T @ np.hstack([Bp, Bm])
    sv = np.linalg.svd(stacked, compute_uv=False)
    cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
    if not np.isfinite(cond) or cond > MAX_SPLIT_COND:
        raise DegenerateSplitError(f"degenerate splitting (condition number {cond:.3e})")

    Cp = _orthonormal_columns(Bp, M)
    cross = Cp.conj().T @ M @ Bm
    if cross.size and np.linalg.norm(cross) > 1e-12 * max(1.0, np.linalg.norm(Bm)):
        log.info("split is not M-orthogonal (cross norm %.3e); projecting D-", np.linalg.norm(cross))
    Cm = _orthonormal_columns(Bm - Cp @ cross, M)
    X = np.hstack([Cp, Cm])

    n, p = pair.dim, pair.n_plus
    Qb = X.conj().T @ pair.Q @ X
    Vb = X.conj().T @ pair.V @ X
    return FormPair(np.eye(n), Qb, Vb, SplitSpace.leading(n, p), transform=X)


def _ensure_block(pair: FormPair) -> FormPair:
    return pair if pair.is_block else to_block_coordinates(pair)


@dataclass(frozen=True)
class ConditionCheck:
    """Outcome of one numbered form-perturbation condition."""

    condition: int
    passed: bool
    margin: float
    tolerance: float
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        def clean(x):
            x = float(x)
            return x if np.isfinite(x) else None

        return {
            "condition": int(self.condition),
            "pass": bool(self.passed),
            "margin": clean(self.margin),
            "tolerance": clean(self.tolerance),
        }


@dataclass(frozen=True)
class ConditionReport:
    checks: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, condition: int) -> ConditionCheck:
        for c in self.checks:
            if c.condition == condition:
                return c
        raise KeyError(condition)

    def __add__(self, other: "ConditionReport") -> "ConditionReport":
        return ConditionReport(self.checks + other.checks)

    def failures(self) -> list[int]:
        return [c.condition for c in self.checks if not c.passed]

    def to_json(self) -> str:
        return json.dumps([c.to_dict() for c in self.checks], indent=2)


def _qscale(Q: np.ndarray) -> float:
    return max(1.0, float(np.linalg.norm(Q, 2))) if Q.size else 1.0


def check_sign_conditions(pair: FormPair, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Conditions (2) and (3): ``Q++`` positive definite, ``Q--`` nonpositive.

    The margins are the smallest eigenvalue of ``Q++`` and the largest of
    ``Q--``; the absolute tolerance is ``tol * max(1, ||Q||)``.
    """
    pair = _ensure_block(pair)
    Qpp, _, _, Qmm = pair.blocks(pair.Q)
    atol = tol * _qscale(pair.Q)
    lo = float(sla.eigvalsh(Qpp)[0]) if Qpp.size else np.inf
    hi = float(sla.eigvalsh(Qmm)[-1]) if Qmm.size else -np.inf
    return ConditionReport((
        ConditionCheck(2, lo > atol, lo, atol),
        ConditionCheck(3, hi <= atol, hi, atol),
    ))


def check_decoupling(pair: FormPair, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Condition (4): ``Q+-`` vanishes.

    The margin is ``||Q+-||_2 / max(1, ||Q||_2)``, compared with ``tol``.
    """
    pair = _ensure_block(pair)
    _, Qpm, _, _ = pair.blocks(pair.Q)
    norm = float(np.linalg.norm(Qpm, 2)) if Qpm.size else 0.0
    margin = norm / _qscale(pair.Q)
    return ConditionReport((ConditionCheck(4, margin <= tol, margin, tol, {"absolute": norm}),))


@dataclass(frozen=True)
class AlphaMetric:
    alpha: float
    G_alpha: np.ndarray

    def norm2(self, x: np.ndarray) -> np.ndarray:
        """Squared alpha-norms of the columns of ``x`` (or of one vector)."""
        x = np.asarray(x)
        return np.real(np.einsum("i...,ij,j...->...", x.conj(), self.G_alpha, x))


def alpha_gram(pair: FormPair, alpha: float) -> AlphaMetric:
    """Gram matrix of ``q[P+x,P+y] - q[P-x,P-y] + alpha <x,y>``."""
    if not alpha > 0:
        raise AlphaMetricError(f"alpha must be positive, got {alpha}")
    pair = _ensure_block(pair)
    if not check_sign_conditions(pair).passed:
        raise AlphaMetricError("alpha metric undefined: sign conditions violated")
    Qpp, _, _, Qmm = pair.blocks(pair.Q)
    G = sla.block_diag(Qpp, -Qmm) + alpha * np.eye(pair.dim)
    return AlphaMetric(float(alpha), G)


def form_bound_constant(pair: FormPair, metric: AlphaMetric) -> float:
    """Smallest ``C`` with ``|v[x,y]| <= C ||x||_alpha ||y||_alpha``."""
    pair = _ensure_block(pair)
    if not pair.V.any():
        return 0.0
    w = sla.eigh(pair.V, metric.G_alpha, eigvals_only=True)
    return float(np.max(np.abs(w)))


def build_V_alpha(pair: FormPair, metric: AlphaMetric) -> np.ndarray:
    """The operator with ``<V_alpha x, y>_alpha = v[x, y]``, i.e. ``G^{-1} V``."""
    pair = _ensure_block(pair)
    try:
        c = sla.cho_factor(metric.G_alpha)
    except np.linalg.LinAlgError as exc:
        raise MetricSingularError("metric singular") from exc
    rcond = 1.0 / np.linalg.cond(metric.G_alpha)
    if rcond < 1e-15:
        raise MetricSingularError(f"metric singular (rcond {rcond:.2e})")
    return sla.cho_solve(c, pair.V)


def _u_plus_v_margin(pair: FormPair, metric: AlphaMetric) -> float:
    # In G-orthonormal coordinates U + V_alpha becomes U + R^{-H} V R^{-1},
    # which is Hermitian; U commutes with the block-diagonal Cholesky factor.
    R = sla.cholesky(metric.G_alpha, lower=False)
    Rinv = sla.solve_triangular(R, np.eye(pair.dim), lower=False)
    Vt = Rinv.conj().T @ pair.V @ Rinv
    U = np.diag(np.r_[np.ones(pair.n_plus), -np.ones(pair.n_minus)])
    w = sla.eigvalsh(hermitize(U + Vt))
    return float(np.min(np.abs(w)))


def check_U_plus_V_invertible(
    pair: FormPair, metric: AlphaMetric, tol: float = DEFAULT_TOL, scan: bool = True
) -> ConditionReport:
    """Condition (8): ``U + V_alpha`` boundedly invertible for large ``alpha``.

    The margin is the smallest singular value of ``U + V_alpha`` measured in
    the alpha-geometry at ``metric.alpha``.  With ``scan`` the check also
    tries every alpha in :data:`ALPHA_GRID` and passes if any grid point does;
    the largest margin found is kept in ``details``.
    """
    pair = _ensure_block(pair)
    margin = _u_plus_v_margin(pair, metric)
    per_alpha = {metric.alpha: margin}
    if scan:
        for a in ALPHA_GRID:
            if a not in per_alpha:
                per_alpha[a] = _u_plus_v_margin(pair, alpha_gram(pair, a))
    best_alpha = max(per_alpha, key=per_alpha.get)
    details = {
        "margin_at_alpha": margin,
        "passed_at_alpha": margin > tol,
        "best_alpha": best_alpha,
        "best_margin": per_alpha[best_alpha],
        "scan": dict(sorted(per_alpha.items())),
    }
    return ConditionReport((ConditionCheck(8, per_alpha[best_alpha] > tol, margin, tol, details),))


def check_spectral_split_consistency(pair: FormPair, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Compare the split with the sign split of ``Q`` (reported as condition 1).

    ``D+`` must be the span of eigenvectors of ``Q`` with positive eigenvalues
    and ``D-`` the span for the nonpositive ones.  Eigenvectors of a matrix of
    norm ``||Q||`` are only determined to ``eps ||Q|| / gap``, so the angle
    tolerance is ``tol * max(1, ||Q||) / gap`` where ``gap`` is the distance
    of the spectrum of ``Q`` from zero.
    """
    pair = _ensure_block(pair)
    w, Z = sla.eigh(pair.Q)
    scale = _qscale(pair.Q)
    atol0 = tol * scale
    ambiguous = bool(np.any(np.abs(w) <= atol0))
    if ambiguous:
        log.warning("ambiguous sign split: eigenvalue of Q within %.2e of 0", atol0)
    pos = w > 0  # zero goes to D-
    p = pair.n_plus
    gap = float(np.min(np.abs(w))) if w.size else 1.0
    angle_tol = atol0 / max(gap, atol0)
    details = {"ambiguous": ambiguous, "n_positive": int(pos.sum()), "gap": gap}
    if pos.sum() != p:
        return ConditionReport((ConditionCheck(1, False, np.pi / 2, angle_tol, details),))
    # sine of the largest principal angle: the D- rows of the positive eigenvectors
    Zp = Z[:, pos]
    s_plus = np.linalg.norm(Zp[p:, :], 2) if Zp.size and p < pair.dim else 0.0
    angle = float(np.arcsin(min(1.0, s_plus)))
    return ConditionReport((ConditionCheck(1, angle <= angle_tol, angle, angle_tol, details),))


def check_all(
    pair: FormPair, alpha: float = 1.0, tol: float = DEFAULT_TOL
) -> ConditionReport:
    """Run every matrix-level check for the eight form conditions."""
    pair = _ensure_block(pair)
    vacuous = {"note": "vacuously true in finite dimensions"}
    report = check_spectral_split_consistency(pair, tol)
    report += check_sign_conditions(pair, tol)
    report += check_decoupling(pair, tol)
    report += ConditionReport((ConditionCheck(5, True, 0.0, tol, vacuous),
                               ConditionCheck(6, True, 0.0, tol, vacuous)))
    if not (report[2].passed and report[3].passed):
        undefined = {"note": "alpha metric undefined"}
        return report + ConditionReport((
            ConditionCheck(7, False, np.inf, np.inf, undefined),
            ConditionCheck(8, False, 0.0, tol, undefined),
        ))
    metric = alpha_gram(pair, alpha)
    C = form_bound_constant(pair, metric)
    report += ConditionReport((ConditionCheck(7, bool(np.isfinite(C)), C, np.inf, {"alpha": alpha}),))
    return report + check_U_plus_V_invertible(pair, metric, tol)
