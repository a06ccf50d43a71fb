import numpy as np
import pytest
from scipy import stats

from nmcopula.exceptions import EmptyPreimageError, InvalidTransformError, UnorderedParametersError
from nmcopula.transforms import (
    MeasureMap,
    TransformKind,
    TransformSpec,
    bernoulli_map,
    bernoulli_measure_map,
    build_measure_map,
    compose,
    f3_c_min,
    pseudo_inverse_minus,
    pseudo_inverse_plus,
    scarsini_map,
    scarsini_stages,
    validate_transform,
)

from reference_params import SCARSINI_CONTINUOUS, SCARSINI_JUMP, TABLE_ROWS

FRANK_F2 = TABLE_ROWS[("frank", "f2")][1]
TABLE_TRANSFORMS = {k: t for k, (_, t) in TABLE_ROWS.items()}
GRID = np.linspace(0, 1, 1001)


def ks_uniform(g, seed=0):
    x = np.random.default_rng(seed).random(10000)
    return stats.kstest(g(x), "uniform").pvalue


# --------------------------------------------------------------------------
# transforms


def test_closed_forms():
    v = np.array([0.0, 0.3, 1.0])
    np.testing.assert_allclose(TransformSpec.f1(1.0)(v), (v + 1) / 2)
    np.testing.assert_allclose(TransformSpec.f2(-0.2, 0.5)(v), -0.2 * v**2 + 0.7 * v + 0.5)
    np.testing.assert_allclose(TransformSpec.f3(0.5, 0.25)(v), ((v + 0.25) / 1.25) ** 0.5)
    assert TransformSpec.f2(-0.2, 0.5).f0 == pytest.approx(0.5, abs=1e-15)


def test_right_derivative_at_kinks():
    t = TransformSpec.piecewise([(0.0, 0.4), (0.5, 0.5), (1.0, 1.0)])
    assert t.derivative(0.5) == pytest.approx(1.0)
    assert t.derivative(0.49) == pytest.approx(0.2)
    np.testing.assert_allclose(FRANK_F2.derivative(np.array([0.0, 1.0])), [1 - (-0.159780111) - 0.5415870, 1 + (-0.159780111) - 0.5415870])


def test_kind_parse():
    assert TransformKind.parse("Quadratic_f2") is TransformKind.F2
    assert TransformKind.parse("f3").n_params == 2


def test_shape_errors():
    with pytest.raises(ValueError):
        TransformSpec("f2", (0.1,))


def test_dict_round_trip():
    for t in (FRANK_F2, TransformSpec.f1(2.0), TransformSpec.piecewise([(0, 0.25), (0.75, 0.75), (1, 1)])):
        assert TransformSpec.from_dict(t.to_dict()) == t


@pytest.mark.parametrize(
    "t",
    [TransformSpec.f1(0.0), TransformSpec.identity(), FRANK_F2, TransformSpec.constant_one(), TransformSpec.f3(0.0, 0.3)],
    ids=["f1-c0", "identity", "frank-f2", "one", "f3-a0"],
)
def test_valid_transforms(t):
    assert validate_transform(t)


def test_quadratic_violating_a_le_c():
    report = validate_transform(TransformSpec.f2(0.9, 0.05))
    assert not report
    assert report.first is not None
    assert any("1 + a - c" in v.detail for v in report.violations)


def test_report_names_location():
    t = TransformSpec.custom(lambda v: np.minimum(1.0, 0.5 + 2 * v))
    report = validate_transform(t)
    assert not report
    assert report.first.condition == "difference quotient <= 1"
    assert report.first.location == pytest.approx(0.0)


def test_custom_below_diagonal_rejected():
    report = validate_transform(TransformSpec.custom(lambda v: v**2))
    assert report.first.condition == "f(v) >= v"


def test_custom_callable_failure_is_reported():
    def broken(v):
        raise RuntimeError("boom")

    report = validate_transform(TransformSpec.custom(broken))
    assert not report and report.first.condition == "evaluation"


@pytest.mark.parametrize("key", sorted(TABLE_TRANSFORMS), ids=lambda k: "-".join(k))
def test_fitted_rows_accepted(key):
    assert validate_transform(TABLE_TRANSFORMS[key])


PERTURBED = [
    TransformSpec.f1(-0.1),
    TransformSpec.f2(-0.159780111, -0.01),
    TransformSpec.f2(0.5, 0.5415870 + 0.1),
    TransformSpec.f2(-0.6, 0.5415870),
    TransformSpec.f3(-0.1, 0.3375023),
    TransformSpec.f3(0.4529352, -0.1),
    TransformSpec.f3(2.5, 0.3375023),
    TransformSpec.f3(0.4529352, 0.05),
]


@pytest.mark.parametrize("t", PERTURBED, ids=[str(t) for t in PERTURBED])
def test_perturbed_rows_rejected(t):
    assert not validate_transform(t)


def test_f3_slope_bound():
    for a in (0.2, 0.4529352, 0.9):
        c = f3_c_min(a)
        assert validate_transform(TransformSpec.f3(a, c * (1 + 1e-9)))
        assert not validate_transform(TransformSpec.f3(a, c * 0.98))
    assert f3_c_min(1.5) == pytest.approx(0.5)


# --------------------------------------------------------------------------
# pseudo-inverses


def test_plus_examples():
    assert pseudo_inverse_plus(TransformSpec.f1(1.0), 0.75) == pytest.approx(0.5, abs=1e-15)
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(pseudo_inverse_plus(TransformSpec.identity(), x), x, atol=1e-15)
    # 40-digit bisection value
    assert pseudo_inverse_plus(FRANK_F2, 0.9) == pytest.approx(0.7101048973720377015742, abs=1e-12)


def test_minus_examples():
    assert pseudo_inverse_minus(TransformSpec.f1(1.0), 0.25) == pytest.approx(0.5, abs=1e-15)
    for t in (TransformSpec.f1(1.0), FRANK_F2, TABLE_TRANSFORMS[("gumbel", "f3")]):
        assert pseudo_inverse_minus(t, 0.0) == 1.0
    assert pseudo_inverse_minus(FRANK_F2, 0.3) == pytest.approx(0.5197132414539129143319, abs=1e-12)


def test_minus_empty_preimage():
    with pytest.raises(EmptyPreimageError):
        pseudo_inverse_minus(TransformSpec.f1(1.0), 0.9)


@pytest.mark.parametrize("key", sorted(TABLE_TRANSFORMS), ids=lambda k: "-".join(k))
def test_galois_property(key):
    t = TABLE_TRANSFORMS[key]
    x = np.linspace(t.f0, 1.0, 400)
    g = pseudo_inverse_plus(t, x)
    assert np.all(t(g) >= x - 1e-10)
    inner = g > 1e-6
    assert np.all(t(g[inner] - 1e-6) < x[inner])


def test_piecewise_pseudo_inverses_match_bisection():
    t = TransformSpec.piecewise([(0.0, 0.3), (0.2, 0.3), (0.6, 0.7), (1.0, 1.0)])
    x = np.linspace(0.3, 1.0, 50)
    exact = pseudo_inverse_plus(t, x)
    brute = np.array([GRID[np.argmax(t(GRID) >= xi - 1e-12)] for xi in x])
    np.testing.assert_allclose(exact, brute, atol=1.1e-3)


# --------------------------------------------------------------------------
# measure maps


def test_f1_unit_map_is_absolute_value():
    g = build_measure_map(TransformSpec.f1(1.0))
    np.testing.assert_allclose(g(GRID), np.abs(2 * GRID - 1), atol=1e-12)


@pytest.mark.parametrize("c", [0.3, 1.460967, 4.0])
def test_f1_map_closed_form(c):
    g = build_measure_map(TransformSpec.f1(c))
    f0 = c / (1 + c)
    expected = np.where(GRID >= f0, (1 + c) * GRID - c, 1 - (1 + c) * GRID / c)
    np.testing.assert_allclose(g(GRID), expected, atol=1e-12)


def test_identity_and_constant_one():
    np.testing.assert_allclose(build_measure_map(TransformSpec.identity())(GRID), GRID, atol=1e-15)
    g = build_measure_map(TransformSpec.constant_one())
    np.testing.assert_allclose(g(GRID[:-1]), 1 - GRID[:-1], atol=1e-15)
    assert g(1.0) == 0.0


def test_invalid_transform_rejected():
    with pytest.raises(InvalidTransformError):
        build_measure_map(TransformSpec.f2(0.9, 0.05))


@pytest.mark.parametrize("key", sorted(TABLE_TRANSFORMS), ids=lambda k: "-".join(k))
def test_valley_shape(key):
    t = TABLE_TRANSFORMS[key]
    g = build_measure_map(t)
    assert g(t.f0) == pytest.approx(0.0, abs=1e-12)
    left = GRID[GRID < t.f0]
    right = GRID[GRID >= t.f0]
    assert np.all(np.diff(g(left)) <= 1e-12)
    assert np.all(np.diff(g(right)) >= -1e-12)


def test_compose_order_and_involution():
    flip = lambda x: 1 - x
    np.testing.assert_allclose(compose([flip, flip])(GRID), GRID, atol=1e-15)
    ident = build_measure_map(TransformSpec.identity())
    np.testing.assert_allclose(compose([ident])(GRID), GRID, atol=1e-15)
    square = lambda x: x**2
    assert compose([square, flip])(0.2) == pytest.approx(0.64)
    with pytest.raises(ValueError):
        compose([])


def test_measure_map_rejects_outside_unit():
    with pytest.raises(ValueError):
        bernoulli_measure_map()(1.5)


def test_scarsini_examples():
    g = scarsini_map(*SCARSINI_CONTINUOUS)
    assert g(0.0) == 0.0
    assert g(1.0) == 0.0
    assert scarsini_map(*SCARSINI_JUMP)(0.2) == pytest.approx(0.2)
    with pytest.raises(UnorderedParametersError):
        scarsini_map(0.5, 0.4, 0.55, 0.65, 0.9)


def test_three_stage_composition_matches_direct_formula():
    stages = scarsini_stages(*SCARSINI_CONTINUOUS)
    g = compose([build_measure_map(s) for s in stages])
    direct = scarsini_map(*SCARSINI_CONTINUOUS)
    x = GRID[~np.isclose(GRID, SCARSINI_CONTINUOUS[2])]
    np.testing.assert_allclose(g(x), direct(x), atol=1e-12)


def test_bernoulli_examples():
    assert bernoulli_map(0.25) == 0.5
    assert bernoulli_map(0.75) == 0.5
    assert bernoulli_map(0.0) == 0.0
    assert bernoulli_map(0.5) == 1.0


def test_two_stage_construction_gives_tent_map():
    g = compose([build_measure_map(TransformSpec.constant_one()), build_measure_map(TransformSpec.f1(1.0))])
    np.testing.assert_allclose(g(GRID), np.minimum(2 * GRID, 2 - 2 * GRID), atol=1e-12)


MAPS = {
    **{"-".join(k): build_measure_map(t) for k, t in TABLE_TRANSFORMS.items()},
    "scarsini-continuous": scarsini_map(*SCARSINI_CONTINUOUS),
    "scarsini-jump": scarsini_map(*SCARSINI_JUMP),
    "bernoulli": bernoulli_measure_map(),
    "three-stage": compose([build_measure_map(s) for s in scarsini_stages(*SCARSINI_CONTINUOUS)]),
    "tent": compose([build_measure_map(TransformSpec.constant_one()), build_measure_map(TransformSpec.f1(1.0))]),
}


@pytest.mark.parametrize("name", sorted(MAPS))
def test_maps_preserve_uniform(name):
    assert ks_uniform(MAPS[name]) > 0.01


def test_measure_map_single_stage_transform():
    g = build_measure_map(FRANK_F2)
    assert isinstance(g, MeasureMap) and g.transform == FRANK_F2
    x, y = g.curve(11)
    assert x.shape == y.shape == (11,)
