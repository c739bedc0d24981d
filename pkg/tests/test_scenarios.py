import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leakage_measures.errors import ParameterError, SingularityError
from leakage_measures.scenarios import (JOINT_STREAM, GaussianSpec, ScenarioKind, ScenarioSpec,
                                        _draw_joint, _share_draws, as_sample_matrix, make_rng,
                                        sample_gaussian, sample_joint, sample_product_of_marginals)

SHARE = ScenarioSpec("share", 1.0, 10.0, seed=3)
MULT = ScenarioSpec("three_party_mult", 1.0, 10.0, seed=3)


def test_joint_sample_is_deterministic():
    a = sample_joint(SHARE, 1000)
    b = sample_joint(SHARE, 1000)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_joint(SHARE.with_seed(4), 1000))


def test_product_sample_is_deterministic():
    a = sample_product_of_marginals(MULT, 500)
    assert a.tobytes() == sample_product_of_marginals(MULT, 500).tobytes()


def test_share_rows_rebuild_from_draws():
    # replay the joint stream and check column 1 = x - r row by row
    rows = sample_joint(SHARE, 257)
    x, r = _share_draws(make_rng(SHARE.seed, JOINT_STREAM), 257, 1.0, np.sqrt(10.0))
    assert np.array_equal(rows[:, 0], x)
    assert np.array_equal(rows[:, 1], x - r)


def test_degenerate_three_party_rows_are_zero():
    rows = _draw_joint(ScenarioKind.THREE_PARTY_MULT, 0.0, 0.0, make_rng(0), 4)
    assert np.array_equal(rows, np.zeros((4, 5)))


def test_shapes():
    assert sample_joint(SHARE, 7).shape == (7, 2)
    assert sample_joint(MULT, 7).shape == (7, 5)
    assert sample_product_of_marginals(MULT, 7).shape == (7, 5)


def test_share_moments_at_one_million():
    j = sample_joint(SHARE, 10**6)
    p = sample_product_of_marginals(SHARE, 10**6)
    assert abs(j[:, 1].var() - 11.0) < 0.1
    assert abs(p[:, 0].var() - 1.0) < 0.1
    assert abs(p[:, 1].var() - 11.0) < 0.1
    assert abs(np.cov(p.T)[0, 1]) < 0.05
    # the joint sample is correlated: Cov(X, X - R) = 1
    assert abs(np.cov(j.T)[0, 1] - 1.0) < 0.05


def test_three_party_product_is_decorrelated():
    p = sample_product_of_marginals(MULT, 10**6)
    corr = np.corrcoef(p.T)[0, 1:]
    assert np.all(np.abs(corr) < 0.05)


@pytest.mark.parametrize("scn", [SHARE, MULT])
def test_product_keeps_marginals(scn):
    j = sample_joint(scn, 10**6)
    p = sample_product_of_marginals(scn, 10**6)
    for c in range(scn.dim):
        lo = min(j[:, c].min(), p[:, c].min())
        hi = max(j[:, c].max(), p[:, c].max())
        hj = np.histogram(j[:, c], bins=50, range=(lo, hi))[0]
        hp = np.histogram(p[:, c], bins=50, range=(lo, hi))[0]
        assert 0.5 * np.abs(hj - hp).sum() / 10**6 <= 0.02


def test_spec_validation():
    with pytest.raises(ParameterError):
        ScenarioSpec("share", 0.0, 1.0)
    with pytest.raises(ParameterError):
        ScenarioSpec("share", 1.0, -2.0)
    with pytest.raises(ParameterError):
        ScenarioSpec("nope")
    with pytest.raises(ParameterError):
        sample_joint(SHARE, 0)


def test_kind_aliases():
    assert ScenarioKind.parse("ThreePartyMult") is ScenarioKind.THREE_PARTY_MULT
    assert ScenarioKind.parse("three-party-mult") is ScenarioKind.THREE_PARTY_MULT
    assert ScenarioSpec("share").dim == 2


def test_json_round_trip(tmp_path):
    path = tmp_path / "scn.json"
    path.write_text(json.dumps(MULT.to_dict()))
    assert ScenarioSpec.from_json(path) == MULT
    with pytest.raises(ParameterError):
        ScenarioSpec.from_dict({"kind": "share", "sigma": 1})


def test_gaussian_spec_checks():
    with pytest.raises(SingularityError):
        GaussianSpec(np.zeros(2), [[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ParameterError):
        GaussianSpec(np.zeros(2), [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ParameterError):
        GaussianSpec(np.zeros(3), np.eye(2))
    # PSD but singular is fine
    GaussianSpec(np.zeros(2), [[1.0, 1.0], [1.0, 1.0]])


def test_sample_gaussian_singular_covariance():
    spec = GaussianSpec([1.0, -1.0], [[1.0, 1.0], [1.0, 1.0]])
    s = sample_gaussian(spec, 2000, seed=1)
    np.testing.assert_allclose(s[:, 0] - s[:, 1], 2.0, atol=1e-12)


def test_sample_gaussian_moments():
    cov = np.array([[2.0, 0.3], [0.3, 0.5]])
    s = sample_gaussian(GaussianSpec([1.0, 2.0], cov), 200_000, seed=9)
    np.testing.assert_allclose(s.mean(axis=0), [1.0, 2.0], atol=0.02)
    np.testing.assert_allclose(np.cov(s.T), cov, atol=0.02)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
def test_as_sample_matrix_vector(values):
    m = as_sample_matrix(values)
    assert m.shape == (len(values), 1)
    assert m.dtype == np.float64


def test_as_sample_matrix_rejects():
    with pytest.raises(ParameterError):
        as_sample_matrix([[1.0, np.nan]])
    with pytest.raises(ParameterError):
        as_sample_matrix(np.zeros((2, 2, 2)))
    with pytest.raises(ParameterError):
        as_sample_matrix([])
