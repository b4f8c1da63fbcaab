from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from frobwdvv.closedform import cf_exp, cf_log, cf_mono, cf_var
from frobwdvv.series import (
    CenterMismatchError, Grading, SeriesMap, SingularCenterError, SingularJacobianError,
    TruncSeries, compose, invert_map, localize, series_reciprocal,
)

F = Fraction


def g(n, order):
    return Grading.total_degree(n, order)


def test_localize_polynomial_is_itself():
    f = cf_mono(F(1, 2), {"v1": 2, "v2": 1})
    s = localize(f, ("v1", "v2"), (F(0), F(0)), g(2, 4))
    assert s.coeffs == {(2, 1): F(1, 2)}


def test_localize_exp():
    s = localize(cf_exp("v2"), ("v1", "v2"), (F(0), F(0)), g(2, 3))
    assert s.coeffs == {(0, 0): F(1), (0, 1): F(1), (0, 2): F(1, 2), (0, 3): F(1, 6)}


def test_localize_shifted_power():
    # (v2)^4/72 at center v2=3, order 2: 9/8 + (3/2) x + (3/4) x^2
    f = cf_mono(F(1, 72), {"v2": 4})
    s = localize(f, ("v1", "v2"), (F(0), F(3)), g(2, 2))
    assert s.coeffs == {(0, 0): F(9, 8), (0, 1): F(3, 2), (0, 2): F(3, 4)}


def test_localize_log_at_one_is_exact():
    s = localize(cf_log("u"), ("u",), (F(1),), g(1, 4))
    assert s.coeffs == {(1,): F(1), (2,): F(-1, 2), (3,): F(1, 3), (4,): F(-1, 4)}
    assert s.is_exact()


def test_localize_singular_center():
    with pytest.raises(SingularCenterError):
        localize(cf_log("u"), ("u",), (F(0),), g(1, 3))
    with pytest.raises(SingularCenterError):
        localize(cf_var("u", F(1, 2)), ("u",), (F(0),), g(1, 3))
    # fractional power away from zero is fine
    s = localize(cf_var("u", F(5, 2)), ("u",), (F(3, 2),), g(1, 2))
    assert s.is_exact()


def test_invert_one_variable_catalan():
    # y = x + x^2 inverts to x = y - y^2 + 2y^3 - 5y^4 + 14y^5
    gr = g(1, 5)
    x = TruncSeries.coordinate(0, ("x",), (F(0),), gr)
    m = SeriesMap((x + x * x,))
    inv = invert_map(m)
    assert inv.components[0].coeffs == {
        (1,): F(1), (2,): F(-1), (3,): F(2), (4,): F(-5), (5,): F(14)}
    # composition both ways gives the identity
    back = compose(inv.components[0], m)
    assert back.coeffs == {(1,): F(1)}


def test_invert_identity():
    gr = g(2, 6)
    comps = tuple(TruncSeries.coordinate(i, ("a", "b"), (F(0), F(0)), gr) + F(i)
                  for i in range(2))
    m = SeriesMap(comps)
    inv = invert_map(m)
    round1 = compose(inv.components[0], m)
    assert round1.coeffs == {(1, 0): F(1)}


def test_invert_p1_hat_map_order8():
    # hat coordinates of the two-variable toy: (e^{v2} - 1 shifted, v1)
    gr = g(2, 8)
    f1 = localize(cf_exp("v2"), ("v1", "v2"), (F(0), F(0)), gr)
    f2 = localize(cf_var("v1"), ("v1", "v2"), (F(0), F(0)), gr)
    m = SeriesMap((f1, f2))
    inv = invert_map(m)
    for i in range(2):
        src = compose(inv.components[i], m)
        want = TruncSeries.coordinate(i, ("v1", "v2"), (F(0), F(0)), gr)
        assert (src - want).is_zero()
    center = m.target_center()
    for i in range(2):
        tgt = compose(m.components[i], inv)
        want = TruncSeries.coordinate(i, inv.components[0].vars, center, gr) + center[i]
        assert (tgt - want).is_zero()


def test_singular_jacobian():
    gr = g(2, 4)
    x = TruncSeries.coordinate(0, ("a", "b"), (F(0), F(0)), gr)
    m = SeriesMap((x, x * x))
    with pytest.raises(SingularJacobianError):
        invert_map(m)


def test_compose_center_mismatch():
    gr = g(1, 4)
    f = TruncSeries(("y",), (F(1),), {(1,): F(1)}, gr)
    x = TruncSeries.coordinate(0, ("x",), (F(0),), gr)
    with pytest.raises(CenterMismatchError):
        compose(f, SeriesMap((x,)))  # constant term 0 != center 1


def test_compose_square_substitution():
    # (x^2) composed with x = y - y^2 gives y^2 - 2y^3 + y^4
    gr = g(1, 4)
    y = TruncSeries.coordinate(0, ("y",), (F(0),), gr)
    m = SeriesMap((y - y * y,))
    f = TruncSeries(("x",), (F(0),), {(2,): F(1)}, gr)
    out = compose(f, m)
    assert out.coeffs == {(2,): F(1), (3,): F(-2), (4,): F(1)}


def test_reciprocal():
    gr = g(1, 6)
    x = TruncSeries.coordinate(0, ("x",), (F(0),), gr)
    s = series_reciprocal(1 + x)
    assert s.coeffs == {(k,): F((-1) ** k) for k in range(7)}
    prod = s * (1 + x)
    assert prod.coeffs == {(0,): F(1)}


def test_truncation_is_an_ideal():
    gr = g(1, 5)
    x = TruncSeries.coordinate(0, ("x",), (F(0),), gr)
    f = 1 + x + x ** 5
    h = x ** 3 + x ** 2
    full = f * h
    assert all(gr.wdeg(i) <= 5 for i in full.coeffs)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=3),
                min_size=2, max_size=4))
def test_invert_random_unit_jacobian(coefs):
    # x + sum c_k x^k: unit Jacobian, inverse composes to identity exactly
    gr = g(1, 6)
    x = TruncSeries.coordinate(0, ("x",), (F(0),), gr)
    m0 = x
    p = x
    for c in coefs:
        p = p * x
        m0 = m0 + p * c
    m = SeriesMap((m0,))
    inv = invert_map(m)
    assert compose(inv.components[0], m).coeffs == {(1,): F(1)}


def test_exact_and_float_paths_agree():
    f = cf_exp("u", 2) * cf_mono(F(1, 3), {"u": 2})
    exact = localize(f, ("u",), (F(0),), g(1, 6))
    approx = localize(f, ("u",), (0.0,), g(1, 6))
    for idx, c in exact.coeffs.items():
        assert abs(complex(approx.coeffs[idx]) - complex(c)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.lists(st.fractions(min_value=-1, max_value=1, max_denominator=2),
                min_size=4, max_size=4))
def test_invert_random_two_variable_map(cs):
    # identity plus quadratic perturbation: unit Jacobian, exact inverse
    gr = g(2, 5)
    x = TruncSeries.coordinate(0, ("a", "b"), (F(0), F(0)), gr)
    y = TruncSeries.coordinate(1, ("a", "b"), (F(0), F(0)), gr)
    m = SeriesMap((x + x * y * cs[0] + y * y * cs[1],
                   y + x * x * cs[2] + x * y * cs[3]))
    inv = invert_map(m)
    for i, want in enumerate((x, y)):
        assert (compose(inv.components[i], m) - want).is_zero()


def test_series_json_emission():
    gr = g(2, 3)
    s = TruncSeries(("x", "y"), (F(0), F(1)), {(1, 0): F(2), (0, 2): F(-1, 3)}, gr)
    obj = s.to_json_obj()
    assert obj["center"] == ["0", "1"]
    assert obj["grading"]["order"] == "3"
    assert [[1, 0], "2"] in obj["coeffs"] and [[0, 2], "-1/3"] in obj["coeffs"]
