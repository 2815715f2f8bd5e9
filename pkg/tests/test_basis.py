import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochcut.basis import (BasisSpec, default_basis, default_terms, features, features_post,
                            q_value)


def test_fourier_examples():
    spec = BasisSpec("fourier", np.array([[0] * 7, [1, 0, 0, 0, 0, 0, 0]]), 70)
    phi = features_post(spec, np.array([70, 0, 0, 0, 0, 0, 0]))
    assert phi[0] == 1.0
    assert phi[1] == pytest.approx(-1.0, abs=1e-15)


def test_polynomial_example():
    spec = BasisSpec("polynomial", np.array([[2, 0, 0]]), 70)
    assert features_post(spec, np.array([3, 5, 1])).tolist() == [9.0]
    norm = BasisSpec("polynomial", np.array([[2, 0, 0]]), 70, normalize=True)
    assert features_post(norm, np.array([35, 5, 1]))[0] == pytest.approx(0.25)


def test_default_term_counts():
    assert default_terms("polynomial", 1).tolist() == [[0], [1], [2]]
    assert len(default_terms("fourier", 2)) == 9
    assert len(default_terms("polynomial", 7)) == 15
    assert len(default_terms("fourier", 7)) == 99


def test_default_fourier_rows_are_distinct_and_sparse():
    terms = default_terms("fourier", 7)
    assert len({tuple(r) for r in terms.tolist()}) == 99
    assert np.all((terms > 0).sum(axis=1) <= 2)
    assert set(np.unique(terms)) == {0, 1, 2}


def test_q_value_examples():
    assert q_value([1.0, -1.0], [2.0, 3.0]) == -1.0
    assert q_value([4.0, 5.0], [0.0, 0.0]) == 0.0
    assert q_value([0.0, 1.0, 0.0], [7.0, 8.0, 9.0]) == 8.0
    with pytest.raises(ValueError):
        q_value([1.0], [1.0, 2.0])


def test_features_depend_only_on_post_state(steel):
    spec = default_basis(steel, "fourier")
    s = np.array([0, 13, 0, 0, 0, 0, 0])
    x1 = np.zeros(15, dtype=np.int64)
    x1[1] = 1
    # cutting P2 from zero vs holding 13 of item 1 already
    s1 = np.array([0, 0, 0, 0, 0, 0, 0])
    s2 = np.array([13, 0, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(features(steel, spec, s1, x1),
                                  features(steel, spec, s2, np.zeros(15, dtype=np.int64)))
    assert features(steel, spec, s, x1).shape == (99,)


@given(st.lists(st.integers(0, 70), min_size=7, max_size=7))
@settings(max_examples=100, deadline=None)
def test_fourier_matches_direct_cosine(post):
    terms = default_terms("fourier", 7)
    spec = BasisSpec("fourier", terms, 70)
    post = np.array(post)
    direct = np.cos(math.pi * (terms @ post) / 70)
    np.testing.assert_allclose(features_post(spec, post), direct, atol=1e-12)


def test_fourier_clamps_out_of_range(caplog):
    spec = BasisSpec("fourier", np.array([[1, 0]]), 10)
    with caplog.at_level("WARNING"):
        phi = features_post(spec, np.array([12, 0]))
    assert phi[0] == pytest.approx(-1.0)
    assert "clamping" in caplog.text


@pytest.mark.parametrize("kwargs", [
    dict(kind="wavelet", terms=np.zeros((1, 2)), s_max=3),
    dict(kind="fourier", terms=np.zeros((2, 2)), s_max=3),
    dict(kind="polynomial", terms=-np.ones((1, 2)), s_max=3),
    dict(kind="polynomial", terms=np.zeros((1, 2)), s_max=0),
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        BasisSpec(**kwargs)


def test_spec_round_trip():
    spec = BasisSpec("polynomial", default_terms("polynomial", 3), 9, normalize=True)
    back = BasisSpec.from_dict(spec.to_dict())
    assert back.kind == spec.kind and back.normalize
    np.testing.assert_array_equal(back.terms, spec.terms)


def test_post_state_shape_checked():
    spec = BasisSpec("polynomial", default_terms("polynomial", 2), 5)
    with pytest.raises(ValueError):
        features_post(spec, np.array([1, 2, 3]))
