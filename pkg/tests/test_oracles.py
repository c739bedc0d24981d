import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, linalg, stats

from leakage_measures.errors import ParameterError, SingularityError
from leakage_measures.oracles import (_share_kl, gaussian_kl, gaussian_w2, js_upper_bound_gmm, psd_sqrt,
                                      share_oracle, share_scenario_kl, to_base, tv_upper_bound,
                                      tv_upper_bounds)
from leakage_measures.scenarios import GaussianSpec, ScenarioSpec, joint_gaussian, marginal_product_gaussian

JOINT = joint_gaussian(ScenarioSpec("share", 1.0, 10.0))
PROD = marginal_product_gaussian(ScenarioSpec("share", 1.0, 10.0))


def _n1(mu, var):
    return GaussianSpec([mu], [[var]])


@st.composite
def spd(draw, d):
    a = np.array(draw(st.lists(st.floats(-2, 2), min_size=d * d, max_size=d * d))).reshape(d, d)
    return a @ a.T + 0.1 * np.eye(d)


def test_kl_share_matrices():
    assert gaussian_kl(JOINT, PROD) == pytest.approx(0.5 * math.log(1.1), abs=1e-12)
    assert share_scenario_kl(1.0, 10.0) == pytest.approx(0.047655089902162, abs=1e-14)


def test_kl_one_dimensional_against_quadrature():
    p, q = stats.norm(0, 1), stats.norm(1, 1)
    numeric = integrate.quad(lambda x: p.pdf(x) * (p.logpdf(x) - q.logpdf(x)), -12, 12)[0]
    assert gaussian_kl(_n1(0, 1), _n1(1, 1)) == pytest.approx(0.5, abs=1e-12)
    assert numeric == pytest.approx(0.5, abs=1e-9)


def test_kl_identity_and_errors():
    assert gaussian_kl(JOINT, JOINT) == pytest.approx(0.0, abs=1e-15)
    singular = GaussianSpec(np.zeros(2), np.ones((2, 2)))
    with pytest.raises(SingularityError):
        gaussian_kl(JOINT, singular)
    with pytest.raises(ParameterError):
        gaussian_kl(JOINT, _n1(0, 1))


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_share_kl_matches_matrix_form(sx2, sr2):
    scn = ScenarioSpec("share", sx2, sr2)
    exact = gaussian_kl(joint_gaussian(scn), marginal_product_gaussian(scn))
    assert share_scenario_kl(sx2, sr2) == pytest.approx(exact, abs=1e-12, rel=1e-9)


def test_share_kl_values():
    assert share_scenario_kl(1.0, 1.0) == pytest.approx(0.5 * math.log(2.0), abs=1e-15)
    assert _share_kl(0.0, 10.0) == 0.0
    with pytest.raises(ParameterError):
        share_scenario_kl(0.0, 10.0)


@given(spd(3), spd(3), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_kl_nonnegative(a, b, mu):
    assert gaussian_kl(GaussianSpec(mu, a), GaussianSpec(np.zeros(3), b)) >= -1e-12


def test_w2_share_value():
    # independent route: scipy's general matrix square root
    s1, s2 = JOINT.covariance, PROD.covariance
    r2 = linalg.sqrtm(s2).real
    ref = math.sqrt(np.trace(s1 + s2 - 2 * linalg.sqrtm(r2 @ s1 @ r2).real))
    assert gaussian_w2(JOINT, PROD) == pytest.approx(ref, abs=1e-10)
    assert gaussian_w2(JOINT, PROD) == pytest.approx(0.29235386, abs=1e-8)


def test_w2_one_dimensional():
    assert gaussian_w2(_n1(0, 1), _n1(0, 4)) == pytest.approx(1.0, abs=1e-12)
    assert gaussian_w2(_n1(0, 1), _n1(3, 1)) == pytest.approx(3.0, abs=1e-12)
    # cancellation near zero limits the absolute accuracy
    assert gaussian_w2(JOINT, JOINT) == pytest.approx(0.0, abs=1e-6)


def test_w2_one_dimensional_empirical():
    # sorted-sample coupling is optimal in 1-D
    r = np.random.default_rng(5)
    a = np.sort(r.standard_normal(400_000))
    b = np.sort(2.0 * r.standard_normal(400_000))
    assert math.sqrt(np.mean((a - b) ** 2)) == pytest.approx(1.0, abs=0.01)


@given(spd(2), spd(2))
def test_w2_symmetric(a, b):
    p, q = GaussianSpec(np.zeros(2), a), GaussianSpec(np.zeros(2), b)
    assert gaussian_w2(p, q) == pytest.approx(gaussian_w2(q, p), abs=1e-10)


def test_psd_sqrt_rejects_negative():
    with pytest.raises(SingularityError):
        psd_sqrt(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_js_bound_values():
    assert js_upper_bound_gmm(JOINT, PROD) == pytest.approx(0.0356156, abs=1e-7)
    assert js_upper_bound_gmm(JOINT, PROD, base="e") == pytest.approx(0.0246868, abs=1e-7)
    # both KLs equal 0.5: -log((1 + e^-0.5)/2)
    assert js_upper_bound_gmm(_n1(0, 1), _n1(1, 1), base="e") == pytest.approx(0.2190702, abs=1e-7)
    assert js_upper_bound_gmm(JOINT, JOINT) == 0.0


def test_tv_bounds():
    assert tv_upper_bounds(0.0) == (0.0, 0.0)
    pinsker, bh = tv_upper_bounds(0.5 * math.log(1.1))
    assert pinsker == pytest.approx(0.1543617, abs=1e-7)
    assert bh == pytest.approx(0.2157253, abs=1e-7)
    assert tv_upper_bound(0.5 * math.log(1.1)) == pinsker
    assert tv_upper_bounds(math.inf) == (math.inf, 1.0)
    with pytest.raises(ParameterError):
        tv_upper_bounds(-0.1)


@given(st.floats(0, 50), st.floats(0, 50))
def test_tv_bound_monotone(a, b):
    lo, hi = sorted((a, b))
    assert tv_upper_bound(lo) <= tv_upper_bound(hi)
    assert tv_upper_bound(hi) <= 1.0


def test_to_base():
    assert to_base(math.log(2.0), 2) == pytest.approx(1.0)
    assert to_base(1.0, "e") == 1.0
    assert to_base(math.log(10.0), 10) == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        to_base(1.0, 1)


def test_share_oracle_report():
    rep = share_oracle(ScenarioSpec("share", 1.0, 10.0))
    d = rep.to_dict()
    assert set(d) >= {"kl_exact", "tv_upper", "js_upper", "w2_exact"}
    assert rep.tv_upper == pytest.approx(0.154, abs=5e-4)
    assert rep.js_upper == pytest.approx(0.0356, abs=5e-4)
    assert rep.w2_exact == pytest.approx(0.292, abs=5e-4)
    with pytest.raises(ParameterError):
        share_oracle(ScenarioSpec("three_party_mult"))
