"""Gap eigenvalues of a Dirac-Coulomb channel and the two channel certificates."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..forms import DEFAULT_TOL, ConditionReport, FormPair, check_all, to_block_coordinates
from ..minimax import MinimaxResult, SForm, assemble_s, gap_eigenvector, schur_reduce, solve_all
from .channel import KappaChannel, assemble_coulomb, p_split, t_split
from .oracle import CouplingRegime, radial_quantum_number, regime_classify, sommerfeld_oracle

log = logging.getLogger(__name__)

GAP_CEILING = 1.0
WARN_NU = 0.95
KATO_CONSTANT = math.pi / 2


class OvercriticalError(ValueError):
    pass


class RegimeError(ValueError):
    pass


class FormCheckError(RuntimeError):
    def __init__(self, report: ConditionReport):
        super().__init__(f"form conditions failed: {report.failures()}")
        self.report = report


def channel_pair(channel: KappaChannel, nu: float, split_kind: str = "P", eps: float = 0.0) -> FormPair:
    """Free form plus Coulomb form with the chosen split, in block coordinates."""
    if split_kind == "P":
        split = p_split(channel)
    elif split_kind == "T":
        split = t_split(channel)
    else:
        raise ValueError(f"unknown split {split_kind!r}; expected 'P' or 'T'")
    V = assemble_coulomb(channel, nu, eps)
    return to_block_coordinates(FormPair(channel.M, channel.W_free, V, split))


def _plus_metric(channel: KappaChannel, pair: FormPair) -> np.ndarray:
    X = pair.transform[:, : pair.n_plus]
    H = X.T @ channel.H_half @ X
    return 0.5 * (H + H.T)


def level_reference(nu: float, kappa: int, k: int) -> float | None:
    try:
        return sommerfeld_oracle(nu, kappa, radial_quantum_number(kappa, k))
    except ValueError:
        return None


@dataclass(frozen=True)
class ChannelSolution:
    kappa: int
    nu: float
    split: str
    eps: float
    results: list[MinimaxResult]
    references: list[float | None]
    regime: CouplingRegime
    report: ConditionReport | None = None
    notes: tuple[str, ...] = ()
    sform: SForm | None = field(default=None, repr=False)
    pair: FormPair | None = field(default=None, repr=False)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lambda_k for r in self.results])

    def errors(self) -> list[float | None]:
        return [None if ref is None else abs(r.lambda_k - ref)
                for r, ref in zip(self.results, self.references)]


def solve_channel(
    channel: KappaChannel,
    nu: float,
    split_kind: str = "P",
    k_max: int = 1,
    eps: float = 0.0,
    force: bool = False,
    tol: float = DEFAULT_TOL,
) -> ChannelSolution:
    """Levels ``k = 1..k_max`` in the gap ``(a, 1)`` of one channel.

    The P split is checked against all form conditions first; the T split
    does not block-diagonalise the free form, so only the a-posteriori
    positivity of the first level is recorded for it.

    Raises:
        OvercriticalError: ``nu >= 1``.
        RegimeError: T split above its coupling threshold without ``force``.
        FormCheckError: a form condition fails for the P split.
    """
    if nu >= 1.0:
        raise OvercriticalError(f"nu = {nu} is outside the subcritical range nu < 1")
    regime = regime_classify(nu)
    notes = []
    if nu >= WARN_NU:
        msg = f"nu = {nu} >= {WARN_NU}: the r^sqrt(kappa^2 - nu^2) behaviour needs a fine basis"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    if split_kind == "T" and not regime.talman_ok:
        msg = f"T split needs nu <= {2 / (2 / math.pi + math.pi / 2):.10f}, got {nu}"
        if not force:
            raise RegimeError(msg)
        notes.append("forced: " + msg)

    pair = channel_pair(channel, nu, split_kind, eps)
    report = None
    if split_kind == "P":
        report = check_all(pair, tol=tol)
        if not report.passed:
            raise FormCheckError(report)
    s = assemble_s(pair, b=GAP_CEILING)
    results = solve_all(s, k_max)
    if results and not results[0].assumption_iii:
        notes.append("first level not above a: a-posteriori positivity check failed")
    refs = [level_reference(nu, channel.kappa, r.k) for r in results]
    return ChannelSolution(channel.kappa, nu, split_kind, eps, results, refs, regime, report,
                           tuple(notes), s, pair)


@dataclass(frozen=True)
class KatoReport:
    nu: float
    eps: float
    max_ratio: float
    bound: float
    passed: bool
    n_samples: int
    ratios: np.ndarray = field(repr=False)


def kato_certificate(
    channel: KappaChannel,
    nu: float,
    eps: float = 0.0,
    n_random: int = 100,
    seed: int = 0,
    split_kind: str = "P",
    u: float = 0.0,
    samples: np.ndarray | None = None,
) -> KatoReport:
    """Compare ``m_u[L_u x]`` with ``(pi/2) <x, |H_0| x>`` over sampled ``x`` in ``D+``.

    ``m_u[y] = u ||y||^2 - s[y]`` on ``D-``.  Samples are the ``D+`` basis
    vectors followed by ``n_random`` Gaussian combinations, unless
    ``samples`` (columns in ``D+`` block coordinates) is given.
    """
    pair = channel_pair(channel, nu, split_kind, eps)
    s = assemble_s(pair, b=GAP_CEILING)
    red = schur_reduce(s, u)
    Hp = _plus_metric(channel, pair)
    if samples is None:
        rng = np.random.default_rng(seed)
        samples = np.hstack([np.eye(pair.n_plus), rng.standard_normal((pair.n_plus, n_random))])
    Y = red.L @ samples
    m = u * np.einsum("ij,ij->j", Y, Y) - np.einsum("ij,ij->j", Y, s.Smm @ Y)
    h = np.einsum("ij,ij->j", samples, Hp @ samples)
    slack = KATO_CONSTANT * h + 1e-8 * np.maximum(1.0, h) - m
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(h > 0, m / np.where(h > 0, h, 1.0), 0.0)
    return KatoReport(nu, eps, float(ratios.max(initial=0.0)), KATO_CONSTANT,
                      bool(np.all(slack >= 0)), samples.shape[1], ratios)


@dataclass(frozen=True)
class EpsilonReport:
    nu: float
    u: float
    eps: tuple[float, ...]
    g_eps: tuple[float, ...]
    g_zero: float
    differences: tuple[float, ...]
    scale: float
    monotone: bool
    final_ok: bool
    nonneg_premise: bool
    nonneg_transfer: bool

    @property
    def passed(self) -> bool:
        return self.monotone and self.final_ok and self.nonneg_transfer


def epsilon_continuation(
    channel: KappaChannel,
    nu: float,
    eps_list,
    x_plus: np.ndarray | None = None,
    u: float = 0.0,
    split_kind: str = "P",
    n_random: int = 20,
    seed: int = 0,
    final_tol: float = 1e-4,
) -> EpsilonReport:
    """Follow ``g_{nu,eps}[x+]`` at fixed ``u`` as ``eps`` decreases to 0.

    ``x_plus`` (``D+`` block coordinates) defaults to the ``D+`` part of the
    first gap eigenvector at ``eps = 0``; ``scale`` is its ``|H_0|`` value.
    Nonnegativity transfer: on a random batch, if ``g_eps >= 0`` for every
    sampled ``eps > 0`` then ``g_0 >= -1e-10 scale`` is required.
    """
    eps = tuple(float(e) for e in eps_list)
    if not eps or eps[-1] <= 0 or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_list must be positive and strictly decreasing")

    reductions = {}
    pair0 = None
    for e in eps + (0.0,):
        pair = channel_pair(channel, nu, split_kind, e)
        s = assemble_s(pair, b=GAP_CEILING)
        reductions[e] = schur_reduce(s, u)
        if e == 0.0:
            pair0, s0 = pair, s
    Hp = _plus_metric(channel, pair0)
    if x_plus is None:
        lam = solve_all(s0, 1)[0].lambda_k
        x_plus, _ = gap_eigenvector(s0, lam)

    def g(e, X):
        return np.real(np.einsum("i...,i...->...", X.conj(), reductions[e].G @ X))

    scale = max(float(x_plus @ Hp @ x_plus), np.finfo(float).tiny)
    g0 = float(g(0.0, x_plus))
    ge = tuple(float(g(e, x_plus)) for e in eps)
    diffs = tuple(abs(v - g0) for v in ge)
    monotone = all(b < a or a == b == 0 for a, b in zip(diffs, diffs[1:]))
    final_ok = diffs[-1] <= final_tol * scale

    rng = np.random.default_rng(seed)
    X = rng.standard_normal((pair0.n_plus, n_random))
    scales = np.einsum("ij,ij->j", X, Hp @ X)
    g_batch = np.array([g(e, X) for e in eps])
    premise = bool(np.all(g_batch >= 0))
    transfer = (not premise) or bool(np.all(g(0.0, X) >= -1e-10 * scales))
    return EpsilonReport(nu, u, eps, ge, g0, diffs, scale, monotone, bool(final_ok), premise,
                         transfer)
