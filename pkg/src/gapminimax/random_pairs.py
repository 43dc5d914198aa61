"""Seeded random form pairs that satisfy every form condition by construction.

In block coordinates ``Q = diag(d)`` with ``d+`` in ``[0.5, 3]`` and ``d-``
in ``[-3, -0.5]``, and ``V`` is a random Hermitian matrix rescaled to
spectral norm ``0.9 min |d|``.  Then ``S-- <= -0.05`` while ``S++ >= 0.05``
so the first level lies above ``a``.  A random invertible congruence ``T``
hides the block structure: ``M = T^H T``, forms ``T^H A T`` and split
basis ``T^{-1} E+-``.
"""
from __future__ import annotations

import numpy as np

from .forms import FormPair, SplitSpace


def _hermitian(rng: np.random.Generator, n: int, complex_: bool) -> np.ndarray:
    A = rng.standard_normal((n, n))
    if complex_:
        A = A + 1j * rng.standard_normal((n, n))
    return 0.5 * (A + A.conj().T)


def random_block_pair(
    rng: np.random.Generator,
    n_plus: int,
    n_minus: int,
    coupling: float = 0.9,
    complex_: bool = False,
) -> FormPair:
    """Valid pair already in block coordinates."""
    d = np.concatenate([rng.uniform(0.5, 3.0, n_plus), -rng.uniform(0.5, 3.0, n_minus)])
    n = n_plus + n_minus
    V = _hermitian(rng, n, complex_)
    V *= coupling * np.min(np.abs(d)) / np.linalg.norm(V, 2)
    Q = np.diag(d).astype(V.dtype)
    return FormPair(np.eye(n), Q, V, SplitSpace.leading(n, n_plus))


def random_pair(
    seed: int | np.random.Generator,
    n: int | None = None,
    n_plus: int | None = None,
    coupling: float = 0.9,
    complex_: bool = False,
    congruence: bool = True,
) -> FormPair:
    """Random valid pair; sizes are drawn when not given (``n`` in 2..40)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n is None:
        n = int(rng.integers(2, 41))
    if n_plus is None:
        n_plus = int(rng.integers(1, n))
    block = random_block_pair(rng, n_plus, n - n_plus, coupling, complex_)
    if not congruence:
        return block
    # well-conditioned congruence: orthogonal times a mild diagonal scaling
    Qo, _ = np.linalg.qr(rng.standard_normal((n, n)))
    T = Qo * rng.uniform(0.5, 2.0, n)
    Tinv = np.linalg.inv(T)
    eye = np.eye(n)
    split = SplitSpace(Tinv @ eye[:, :n_plus], Tinv @ eye[:, n_plus:])

    def cong(A):
        return T.conj().T @ A @ T

    return FormPair(cong(np.eye(n)), cong(block.Q), cong(block.V), split)


def pair_suite(seed: int, count: int, max_dim: int = 40, **kw) -> list[FormPair]:
    """``count`` pairs from one generator, for reproducible batches."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, max_dim + 1))
        out.append(random_pair(rng, n=n, **kw))
    return out
