import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from varchoquard import exponents as ex
from varchoquard.errors import InvalidExponentError
from varchoquard.grid import Grid1D


def _bundle(p, s, alpha=0.5, r=3.0):
    return ex.ExponentBundle(ex.symmetric_constant(p), ex.symmetric_constant(s), ex.constant(alpha), ex.constant(r))


@pytest.mark.parametrize("p, s, expected", [(2.0, 0.4, 10.0), (2.0, 1e-12, 2.0)])
def test_critical_exponent_examples(p, s, expected):
    assert ex.critical_exponent(_bundle(p, s), 0.3) == pytest.approx(expected, rel=1e-10)


def test_critical_exponent_against_high_precision():
    mpmath.mp.dps = 30
    ref = mpmath.mpf(1.5) / (1 - mpmath.mpf(1.5) * mpmath.mpf(0.5))
    assert ex.critical_exponent(_bundle(1.5, 0.5), 0.0) == pytest.approx(float(ref), rel=1e-15)


def test_critical_exponent_rejects_supercritical():
    with pytest.raises(InvalidExponentError):
        ex.critical_exponent(_bundle(2.5, 0.5), 0.0)


def test_critical_exponent_increasing_in_s():
    vals = [ex.critical_exponent(_bundle(2.0, s), 0.0) for s in np.linspace(0.05, 0.45, 20)]
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("a, expected", [(0.5, 4.0 / 3.0), (1e-14, 1.0)])
def test_sigma_alpha_examples(a, expected):
    assert ex.sigma_alpha(ex.constant(a), 0.2) == pytest.approx(expected, rel=1e-12)


def test_sigma_alpha_high_precision():
    mpmath.mp.dps = 30
    ref = 2 / (2 - mpmath.mpf("0.9"))
    assert ex.sigma_alpha(ex.constant(0.9), 0.0) == pytest.approx(float(ref), rel=1e-15)


@pytest.mark.parametrize("a", [0.0, 1.0, 1.3])
def test_sigma_alpha_rejects(a):
    with pytest.raises(InvalidExponentError):
        ex.sigma_alpha(ex.constant(a), 0.0)


def test_hls_identity(rng):
    pairs = rng.uniform(0, 1, size=(100, 2))
    assert ex.check_hls_identity(ex.constant(0.4), 1, pairs) <= 1e-15
    alpha = ex.affine(0.3, 0.2)
    assert ex.check_hls_identity(alpha, 1, pairs) <= 1e-12
    corrupted = lambda t: ex.sigma_alpha(alpha, t) + 0.1
    assert ex.check_hls_identity(alpha, 1, pairs, sigma=corrupted) >= 0.01


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(-0.3, 0.3), st.floats(-1, 1), st.floats(-1, 1))
def test_hls_identity_property(a0, a1, x, y):
    alpha = ex.expression(f"{a0} + {a1} * sin(x)")
    vals = alpha(np.array([x, y]))
    assume(vals.min() > 0 and vals.max() < 1)
    assert ex.check_hls_identity(alpha, 1, [(x, y)]) <= 1e-12


def test_symmetric_fields_are_exactly_symmetric(rng):
    x, y = rng.uniform(-1, 1, 500), rng.uniform(-1, 1, 500)
    f = ex.symmetric_expression("2 + 0.1 * x + 0.3 * y**2 + 0.05 * sin(3 * x * y + x)")
    assert np.array_equal(f(x, y), f(y, x))
    for f in (ex.default_bundle().p, ex.default_bundle().s):
        assert np.array_equal(f(x, y), f(y, x))


def test_bounds_check():
    g = Grid1D(0.0, 1.0, 11)
    f = ex.ScalarExponentField(lambda x: 1 + x, declared_inf=1.0, declared_sup=1.5)
    with pytest.raises(InvalidExponentError):
        f.check_bounds(g)
    ex.ScalarExponentField(lambda x: 1 + x, 1.0, 2.0).check_bounds(g)


@pytest.mark.parametrize(
    "p, s, alpha",
    [(2.0, 0.0, 0.5), (2.0, 1.0, 0.5), (1.0, 0.3, 0.5), (3.5, 0.3, 0.5), (2.0, 0.3, 1.0)],
)
def test_admissibility_rejects(p, s, alpha):
    with pytest.raises(InvalidExponentError):
        _bundle(p, s, alpha).check_admissible(Grid1D(-1, 1, 21))


def test_default_bundle(grid101):
    b = ex.default_bundle()
    rg = b.check_admissible(grid101)
    assert rg["p"] == pytest.approx((2.0, 2.2), abs=1e-12)
    assert rg["s"][1] == pytest.approx(0.4)
    assert ex.validate_r_range(b, grid101).ok
    assert 2 * rg["r"][0] > rg["p"][1]


def test_r_range_examples(grid101):
    b = ex.default_bundle()
    upper = ex.hls_upper_field(b, 0.5)
    lower = ex.hls_lower_field(b, 0.5)
    assert ex.validate_r_range(b.with_r(upper), grid101).ok
    assert ex.validate_r_range(b.with_r(lower), grid101).ok
    bad = ex.validate_r_range(b.with_r(ex.critical_field(b)), grid101)
    assert not bad.ok and bad.worst_violation > 0
    mid = b.r(grid101.nodes)
    assert np.allclose(mid, (upper(grid101.nodes) + lower(grid101.nodes)) / 2, rtol=1e-14)


def test_log_holder_constant_examples():
    assert ex.log_holder_constant(ex.constant(2.0), Grid1D(0, 1, 51)) == 0.0
    g = Grid1D(0.0, 1.0, 201)
    val = ex.log_holder_constant(ex.affine(0.0, 1.0), g)
    t = np.linspace(1e-6, 0.5, 200001)
    assert 0 < val <= np.max(t * np.log(1 / t)) + 1e-12


def test_log_holder_constant_of_log_cusp():
    c = 0.3

    def f(x):
        d = np.abs(x - 0.5)
        with np.errstate(divide="ignore"):
            return np.where(d > 0, c / np.log(1 / np.where(d > 0, d, 1.0)), 0.0)

    vals = [ex.log_holder_constant(ex.ScalarExponentField(f), Grid1D(0.3, 0.7, M)) for M in (101, 201, 401)]
    assert all(abs(v - c) < 0.5 * c for v in vals)


def test_log_holder_symmetric_field(grid101):
    assert np.isfinite(ex.log_holder_constant(ex.default_bundle().p, grid101))


def test_tr_condition_examples():
    b = ex.default_bundle()
    from varchoquard.experiments import q_field_builder

    up = ex.hls_upper_field(b, 0.5)
    rhos = np.geomspace(1e-8, 0.4, 60)
    # slower approach (smaller beta, larger constant) satisfies the condition
    r = q_field_builder(up, 0.0, 2.0, 0.3, 2.0)
    assert ex.check_tr_condition(r, up, 0.0, 0.5, 1.0, 0.45, rhos)
    assert not ex.check_tr_condition(up, up, 0.0, 0.5, 1e-3, 0.45, rhos)
    shifted = ex.ScalarExponentField(lambda x: up(x) - 0.5)
    assert ex.check_tr_condition(shifted, up, 0.0, 0.5, 0.01, 0.45, rhos)
    with pytest.raises(ValueError):
        ex.check_tr_condition(r, up, 0.0, 0.5, 1.0, 1.0, rhos)


def test_diagonal_local_minimum(grid101):
    assert ex.check_diagonal_local_minimum(ex.symmetric_expression("0.3 + 0.05 * abs(x - y)"), grid101)
    assert not ex.check_diagonal_local_minimum(ex.default_bundle().s, grid101)
    assert not ex.check_diagonal_local_minimum(ex.default_bundle().p, grid101)


def test_expression_namespace_is_restricted():
    f = ex.expression("__import__('os')")
    with pytest.raises(NameError):
        f(np.zeros(3))
