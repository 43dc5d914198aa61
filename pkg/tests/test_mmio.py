import json

import numpy as np
import pytest

from gapminimax.forms import FormPair, SplitSpace
from gapminimax.mmio import InputError, load_pair, read_matrix, save_pair, write_matrix
from gapminimax.random_pairs import random_block_pair


def test_round_trip_is_exact(tmp_path):
    pair = random_block_pair(np.random.default_rng(0), 3, 4)
    paths = save_pair(tmp_path, pair)
    back = load_pair(paths["M"], paths["Q"], paths["V"], paths["split"])
    for a, b in ((pair.M, back.M), (pair.Q, back.Q), (pair.V, back.V)):
        assert np.array_equal(a, b)
    assert np.array_equal(back.split.basis_plus, pair.split.basis_plus)


def test_complex_hermitian_round_trip(tmp_path):
    A = np.array([[2.0, 1 - 2j], [1 + 2j, -1.0]])
    write_matrix(tmp_path / "a.mtx", A)
    assert np.array_equal(read_matrix(tmp_path / "a.mtx"), A)


def test_sign_of_q_descriptor(tmp_path):
    pair = FormPair(np.eye(3), np.diag([-1.0, 2.0, 3.0]), np.zeros((3, 3)),
                    SplitSpace.from_indices(3, [1, 2]))
    paths = save_pair(tmp_path, pair)
    paths["split"].write_text(json.dumps({"split": "sign-of-Q"}))
    back = load_pair(paths["M"], paths["Q"], paths["V"], paths["split"])
    assert back.n_plus == 2 and back.split.basis_minus.shape[1] == 1


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="not found"):
        load_pair(*(tmp_path / f"{k}.mtx" for k in "MQV"), tmp_path / "s.json")


def test_dimension_mismatch(tmp_path):
    paths = save_pair(tmp_path, random_block_pair(np.random.default_rng(1), 2, 2))
    write_matrix(paths["V"], np.eye(3))
    with pytest.raises(InputError, match="dimension mismatch"):
        load_pair(paths["M"], paths["Q"], paths["V"], paths["split"])


def test_bad_descriptor(tmp_path):
    paths = save_pair(tmp_path, random_block_pair(np.random.default_rng(2), 2, 2))
    for text in ("{not json", json.dumps({"plus_indices": [0, 9]}), json.dumps({})):
        paths["split"].write_text(text)
        with pytest.raises(InputError):
            load_pair(paths["M"], paths["Q"], paths["V"], paths["split"])


def test_unreadable_matrix(tmp_path):
    bad = tmp_path / "bad.mtx"
    bad.write_text("this is not matrix market\n")
    with pytest.raises(InputError):
        read_matrix(bad)


def test_non_coordinate_split_refused(tmp_path):
    rot = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    pair = FormPair(np.eye(2), np.diag([1.0, -1.0]), np.zeros((2, 2)),
                    SplitSpace(rot[:, :1], rot[:, 1:]))
    with pytest.raises(ValueError, match="coordinate splits"):
        save_pair(tmp_path, pair)
