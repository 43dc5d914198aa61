"""Galerkin matrices of one radial Dirac channel and its two splittings.

With ``m = c = 1`` the radial equations for the pair ``(P, Q)`` are

    (1 + V) P + (-d/dr + kappa/r) Q = E P
    (d/dr + kappa/r) P + (-1 + V) Q = E Q

so the free form matrix is ``[[S_P, D], [D^T, -S_Q]]`` with
``D_ij = int B^P_i (-B^Q_j' + kappa B^Q_j / r) dr``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from ..forms import SplitSpace
from .basis import RadialBasis

AMBIGUOUS_SPLIT_TOL = 1e-12


class AmbiguousSplitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KappaChannel:
    """Assembled matrices for angular number ``kappa``.

    ``Y`` is the Gram matrix of ``1/r``; the Coulomb form at ``eps = 0`` is
    ``-nu Y``.  The upper component occupies the first ``n_upper``
    coordinates.
    """

    kappa: int
    basis: RadialBasis
    M: np.ndarray
    W_free: np.ndarray
    Y: np.ndarray
    n_upper: int

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    @cached_property
    def free_spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and M-orthonormal eigenvectors of the free pencil."""
        return sla.eigh(self.W_free, self.M)

    @cached_property
    def H_half(self) -> np.ndarray:
        return h_half_metric(self)


def assemble_channel(basis: RadialBasis, kappa: int) -> KappaChannel:
    if int(kappa) != kappa or kappa == 0:
        raise ValueError(f"invalid quantum number kappa = {kappa!r}")
    kappa = int(kappa)
    t = basis.tables
    wu = t.upper * t.w[:, None]
    SP = wu.T @ t.upper
    SQ = (t.lower * t.w[:, None]).T @ t.lower
    D = wu.T @ (-t.d_lower + kappa * t.lower / t.r[:, None])
    YP, YQ = basis.weighted_gram(1.0 / t.r)
    Z = np.zeros(D.shape)
    M = np.block([[SP, Z], [Z.T, SQ]])
    W = np.block([[SP, D], [D.T, -SQ]])
    Y = np.block([[YP, Z], [Z.T, YQ]])
    return KappaChannel(kappa, basis, M, W, Y, SP.shape[0])


def assemble_coulomb(channel: KappaChannel, nu: float, eps: float = 0.0) -> np.ndarray:
    """Galerkin matrix of ``-nu / (r + eps)`` on both components."""
    if eps < 0:
        raise ValueError(f"negative eps = {eps}")
    if nu < 0:
        raise ValueError(f"negative coupling nu = {nu}")
    if nu == 0:
        return np.zeros_like(channel.M)
    if eps == 0:
        return -nu * channel.Y
    YP, YQ = channel.basis.weighted_gram(1.0 / (channel.basis.tables.r + eps))
    return -nu * sla.block_diag(YP, YQ)


def t_split(channel: KappaChannel) -> SplitSpace:
    """Upper component as ``D+``, lower component as ``D-``."""
    eye = np.eye(channel.dim)
    return SplitSpace(eye[:, : channel.n_upper], eye[:, channel.n_upper:])


def p_split(channel: KappaChannel) -> SplitSpace:
    """Positive and nonpositive spectral subspaces of the free pencil."""
    E, Z = channel.free_spectrum
    if np.min(np.abs(E)) < AMBIGUOUS_SPLIT_TOL:
        raise AmbiguousSplitError("ambiguous spectral split: free eigenvalue near 0")
    pos = E > 0
    return SplitSpace(Z[:, pos], Z[:, ~pos])


def h_half_metric(channel: KappaChannel) -> np.ndarray:
    """``(M Z) |E| (M Z)^T``: the form of ``|H_0|`` in the basis."""
    E, Z = channel.free_spectrum
    MZ = channel.M @ Z
    H = (MZ * np.abs(E)) @ MZ.T
    return 0.5 * (H + H.T)
