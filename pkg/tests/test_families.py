import numpy as np
import pytest
from scipy import integrate, stats

from nmcopula import families as fam
from nmcopula.exceptions import BoundaryEvaluationError, InvalidParametersError
from nmcopula.families import CopulaParams, Family, PickandsParams

from reference_params import TAWN_ROT90

PARAMS = [
    CopulaParams("frank", 9.0850997),
    CopulaParams("frank", -4.0),
    CopulaParams("clayton", 1.7205763),
    CopulaParams("gumbel", 2.2885958),
    CopulaParams("gaussian", 0.7849017),
    CopulaParams("gaussian", -0.5),
    CopulaParams("t", -0.7756732, 5.257317),
    CopulaParams("t", 0.4, 12.0),
    TAWN_ROT90,
    CopulaParams.independence(),
]
IDS = [f"{p.family.value}-{p.theta:g}" for p in PARAMS]


@pytest.fixture(params=PARAMS, ids=IDS)
def params(request):
    return request.param


def test_family_parse_aliases():
    assert Family.parse("Student-t") is Family.STUDENT_T
    assert Family.parse("normal") is Family.GAUSSIAN
    with pytest.raises(InvalidParametersError):
        Family.parse("joe")


@pytest.mark.parametrize(
    "family,kwargs",
    [
        ("frank", {"theta": 0.0}),
        ("clayton", {"theta": -0.5}),
        ("gumbel", {"theta": 0.9}),
        ("gaussian", {"theta": 1.0}),
        ("t", {"theta": 0.5, "nu": 1.5}),
        ("tawn1_rot90", {"theta": 2.0, "psi1": 1.2}),
    ],
)
def test_invalid_parameters_rejected(family, kwargs):
    with pytest.raises(InvalidParametersError):
        CopulaParams(family, **kwargs)


def test_params_dict_round_trip(params):
    assert CopulaParams.from_dict(params.as_dict()) == params


def test_boundary_conditions_exact(params):
    t = np.linspace(0, 1, 101)
    assert np.all(fam.cdf(params, t, 0.0) == 0.0)
    assert np.all(fam.cdf(params, 0.0, t) == 0.0)
    np.testing.assert_array_equal(fam.cdf(params, t, 1.0), t)
    np.testing.assert_array_equal(fam.cdf(params, 1.0, t), t)


def test_frechet_bounds_and_rectangles(params):
    rng = np.random.default_rng(1)
    u, v = rng.random((2, 2000))
    c = fam.cdf(params, u, v)
    assert np.all(c >= np.maximum(u + v - 1, 0) - 1e-15)
    assert np.all(c <= np.minimum(u, v) + 1e-15)
    a, b = np.sort(rng.random((2, 2000)), axis=0), np.sort(rng.random((2, 2000)), axis=0)
    assert np.all(fam.rectangle_mass(params, a[0], a[1], b[0], b[1]) >= -1e-10)


def test_density_matches_mixed_difference(params):
    rng = np.random.default_rng(2)
    u, v = rng.uniform(0.05, 0.95, (2, 40))
    h = 1e-4
    fd = (
        fam.cdf(params, u + h, v + h)
        - fam.cdf(params, u + h, v - h)
        - fam.cdf(params, u - h, v + h)
        + fam.cdf(params, u - h, v - h)
    ) / (4 * h * h)
    np.testing.assert_allclose(fam.pdf(params, u, v), fd, rtol=1e-4)


def test_conditional_cdf_matches_difference(params):
    rng = np.random.default_rng(3)
    u, v = rng.uniform(0.05, 0.95, (2, 40))
    h = 1e-6
    fd = (fam.cdf(params, u + h, v) - fam.cdf(params, u - h, v)) / (2 * h)
    np.testing.assert_allclose(fam.conditional_cdf(params, u, v), fd, rtol=1e-5, atol=1e-8)


def test_inverse_conditional_round_trip(params):
    rng = np.random.default_rng(4)
    u, w = rng.uniform(0.01, 0.99, (2, 200))
    v = fam.inverse_conditional_cdf(params, u, w)
    np.testing.assert_allclose(fam.conditional_cdf(params, u, v), w, atol=1e-9)


def test_density_integrates_to_one(params):
    val, _ = integrate.dblquad(lambda v, u: fam.pdf(params, u, v), 1e-9, 1 - 1e-9, 1e-9, 1 - 1e-9, epsabs=1e-6)
    assert val == pytest.approx(1.0, abs=1e-3)


def test_sample_margins_uniform(params):
    xy = fam.sample(params, 5000, seed=11)
    assert xy.shape == (5000, 2)
    for col in xy.T:
        assert stats.kstest(col, "uniform").pvalue > 0.01


def test_sample_is_deterministic():
    p = CopulaParams("gumbel", 2.0)
    np.testing.assert_array_equal(fam.sample(p, 100, seed=5), fam.sample(p, 100, seed=5))


def test_density_raises_on_boundary(params):
    with pytest.raises(BoundaryEvaluationError):
        fam.pdf(params, 0.0, 0.5)
    with pytest.raises(BoundaryEvaluationError):
        fam.logpdf(params, 0.3, 1.0)


def test_gaussian_strong_dependence_rank_correlation():
    xy = fam.sample(CopulaParams("gaussian", 0.99), 5000, seed=0)
    assert stats.spearmanr(xy[:, 0], xy[:, 1]).statistic > 0.95


def test_frank_reference_value():
    # 30-digit closed-form value, confirmed by quadrature of the density
    p = CopulaParams("frank", 9.0850997)
    assert fam.cdf(p, 0.5, 0.5) == pytest.approx(0.424870694930680776705185813289, abs=1e-13)


def test_frank_empirical_copula():
    p = CopulaParams("frank", 9.0850997)
    xy = fam.sample(p, 20000, seed=9)
    g = np.linspace(0.1, 0.9, 9)
    emp = np.array([[np.mean((xy[:, 0] <= a) & (xy[:, 1] <= b)) for b in g] for a in g])
    exact = fam.cdf(p, g[:, None], g[None, :])
    assert np.max(np.abs(emp - exact)) < 0.02


def test_t_copula_large_nu_is_gaussian():
    u, v = np.array([0.2, 0.7]), np.array([0.6, 0.1])
    np.testing.assert_allclose(
        fam.cdf(CopulaParams("t", 0.5, 150.0), u, v), fam.cdf(CopulaParams("gaussian", 0.5), u, v), atol=1e-14
    )


def test_tawn_reduces_to_gumbel():
    g = np.linspace(0.025, 0.975, 20)
    u, v = np.meshgrid(g, g)
    for th in (1.3, 2.5905362, 6.0):
        tawn = fam.tawn_cdf(PickandsParams(th, 1.0, 1.0), u, v)
        gumbel = fam.cdf(CopulaParams("gumbel", th), u, v)
        np.testing.assert_allclose(tawn, gumbel, atol=1e-10, rtol=0)


def test_tawn_theta_one_is_independence():
    g = np.linspace(0.05, 0.95, 10)
    u, v = np.meshgrid(g, g)
    np.testing.assert_allclose(fam.tawn_cdf(PickandsParams(1.0, 0.2815409, 1.0), u, v), u * v, atol=1e-15)


def test_tawn_reference_value():
    pp = PickandsParams(2.5905362, 0.2815409, 1.0)
    assert fam.tawn_cdf(pp, 0.4, 0.6) == pytest.approx(0.300855210319979648924066836847, abs=1e-14)


def test_pickands_function_properties():
    pp = PickandsParams(2.5905362, 0.2815409, 1.0)
    t = np.linspace(0, 1, 201)
    a = pp.pickands(t)
    assert a[0] == pytest.approx(1.0) and a[-1] == pytest.approx(1.0)
    assert np.all(a >= np.maximum(t, 1 - t) - 1e-12) and np.all(a <= 1 + 1e-12)
    assert np.all(np.diff(a, 2) >= -1e-12)
    assert pp.check_pickands()


def test_rotated_tawn_negative_dependence():
    xy = fam.sample(TAWN_ROT90, 4000, seed=2)
    assert stats.kendalltau(xy[:, 0], xy[:, 1]).statistic < -0.1
    # rotation identity C_rot(u, v) = v - C(1 - u, v)
    pp = PickandsParams(TAWN_ROT90.theta, TAWN_ROT90.psi1, 1.0)
    assert fam.cdf(TAWN_ROT90, 0.3, 0.8) == pytest.approx(0.8 - fam.tawn_cdf(pp, 0.7, 0.8), abs=1e-15)


def test_rotated_tawn_requires_unit_psi2():
    with pytest.raises(InvalidParametersError):
        fam.tawn_rot90_cdf(PickandsParams(2.0, 0.5, 0.5), 0.3, 0.3)
