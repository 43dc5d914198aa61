"""Matrix Market and JSON ingestion of abstract form pairs."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse
import scipy.linalg as sla

from .forms import FormPair, SplitSpace


class InputError(ValueError):
    pass


def read_matrix(path) -> np.ndarray:
    try:
        A = scipy.io.mmread(str(path))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read Matrix Market file {path}: {exc}") from exc
    if scipy.sparse.issparse(A):
        A = A.toarray()
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{path}: expected a square matrix, got shape {A.shape}")
    return A


def write_matrix(path, A: np.ndarray, hermitian: bool = True) -> None:
    symmetry = "general"
    if hermitian:
        symmetry = "hermitian" if np.iscomplexobj(A) else "symmetric"
    scipy.io.mmwrite(str(path), np.asarray(A), symmetry=symmetry, precision=17)


def split_from_descriptor(desc: dict, M: np.ndarray, Q: np.ndarray) -> SplitSpace:
    """``{"plus_indices": [...]}`` or ``{"split": "sign-of-Q"}``."""
    n = M.shape[0]
    if "plus_indices" in desc:
        idx = [int(i) for i in desc["plus_indices"]]
        if any(not 0 <= i < n for i in idx) or len(set(idx)) != len(idx):
            raise InputError(f"plus_indices must be distinct integers in 0..{n - 1}")
        return SplitSpace.from_indices(n, idx)
    if desc.get("split") == "sign-of-Q":
        E, Z = sla.eigh(0.5 * (Q + Q.conj().T), 0.5 * (M + M.conj().T))
        pos = E > 0
        return SplitSpace(Z[:, pos], Z[:, ~pos])
    raise InputError('split descriptor needs "plus_indices" or "split": "sign-of-Q"')


def load_pair(m_path, q_path, v_path, split_path) -> FormPair:
    for p in (m_path, q_path, v_path, split_path):
        if not Path(p).is_file():
            raise InputError(f"input file not found: {p}")
    M, Q, V = (read_matrix(p) for p in (m_path, q_path, v_path))
    if not (M.shape == Q.shape == V.shape):
        raise InputError(f"dimension mismatch: M {M.shape}, Q {Q.shape}, V {V.shape}")
    try:
        desc = json.loads(Path(split_path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{split_path}: invalid JSON: {exc}") from exc
    split = split_from_descriptor(desc, M, Q)
    try:
        return FormPair(M, Q, V, split)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def save_pair(directory, pair: FormPair, stem: str = "") -> dict:
    """Write M, Q, V and a split descriptor; returns the paths.

    The split is stored by indices, so it must be a coordinate split.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {k: d / f"{stem}{k}.mtx" for k in ("M", "Q", "V")}
    for k, A in (("M", pair.M), ("Q", pair.Q), ("V", pair.V)):
        write_matrix(paths[k], A)
    eye = np.eye(pair.dim)
    plus = [int(np.argmax(np.abs(c))) for c in pair.split.basis_plus.T]
    if not np.array_equal(SplitSpace.from_indices(pair.dim, plus).basis_plus, pair.split.basis_plus) \
            or not np.array_equal(pair.split.basis_minus, np.delete(eye, plus, axis=1)):
        raise ValueError("only coordinate splits can be written as plus_indices")
    paths["split"] = d / f"{stem}split.json"
    paths["split"].write_text(json.dumps({"plus_indices": plus}))
    return paths
