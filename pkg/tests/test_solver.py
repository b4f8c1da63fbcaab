import math
from fractions import Fraction

import pytest

from frobwdvv.solver import (
    InconsistentSystemError, chazy_residual_orders, divisor_sigma, nd_via_ode_route,
    p2_family, p2_s2_hat_family, recursion_ck, recursion_mk, recursion_nd,
    recursion_nkl, recursion_qk, recursion_wk, solve_ckl_and_a, solve_slot_family,
)

F = Fraction


def test_nd_first_values():
    out = recursion_nd(4).table()
    assert [out[d] for d in (1, 2, 3, 4)] == [1, 1, 12, 620]


def test_nd_dual_route_agreement():
    a = recursion_nd(6).table()
    b = nd_via_ode_route(6).table()
    assert a == b


def test_nd_slot_route_agrees():
    sol = solve_slot_family(p2_family(5), 5, 4)
    got = {k[1]: v for k, v in sol.values.items() if k[0] == "N"}
    want = recursion_nd(4).table()
    for d, v in want.items():
        assert got[d] == v


def test_ck_values_and_integrality():
    out = recursion_ck(12)
    t = out.table()
    assert [t[k] for k in range(7)] == [1, 1, -2, 104, -24920, 16361976, -22819065536]
    assert all(out.audits["integrality"].values())


def test_ck_hat_ansatz_cross_check():
    # the slot monomials carry the 1/(3k)! normalization, so values are C_k
    sol = solve_slot_family(p2_s2_hat_family(), 5, 4)
    got = {k[1]: v for k, v in sol.values.items() if k[0] == "C"}
    want = recursion_ck(4).table()
    for k in range(1, 5):
        assert got[k] == want[k]


def test_mk_values_and_two_integrality():
    out = recursion_mk(12)
    t = out.table()
    assert [t[k] for k in range(1, 7)] == [1, 1, 8, 177, 6234, -67965]
    assert all(out.audits["two_integrality"].values())


def test_qk_values():
    out = recursion_qk(10)
    t = out.table()
    assert [k * t[k] for k in range(1, 5)] == [-1, 7, -69, 804]
    assert all(out.audits["k_qk_integral"].values())


def test_wk_seed_and_integrality():
    out = recursion_wk(8)
    t = out.table()
    assert t[1] == F(3, 32)
    # leading terms printed in the crystallographic kappa=3 potential
    assert t[2] == F(3, 4096)
    assert t[3] == F(1, 65536)
    assert all(out.audits["scaled_integrality"].values())


def test_chazy_series():
    assert divisor_sigma(6) == 12
    assert chazy_residual_orders(10) == {}


def test_nkl_values_and_symmetry():
    out = recursion_nkl(4)
    t = out.table()
    assert t[(0, 1)] == 1 and t[(1, 0)] == 1
    assert t[(1, 1)] == 1
    assert t[(2, 0)] == 0
    assert out.audits["symmetric"]


def test_nkl_prefix_stability():
    small = recursion_nkl(3).table()
    large = recursion_nkl(4).table()
    for k, v in small.items():
        assert large[k] == v


@pytest.fixture(scope="module")
def hat_families():
    return solve_ckl_and_a(max_ckl_level=8, max_a_level=19)


def test_ckl_printed_values(hat_families):
    t = hat_families["ckl"].table()
    assert t[(2, 3)] == 2 and t[(3, 2)] == 2
    assert t[(3, 5)] == 24 and t[(4, 4)] == 38 and t[(5, 3)] == 24
    assert hat_families["ckl"].audits["pattern_as_expected"]


def test_a21_printed_values(hat_families):
    t = hat_families["a"].table()
    assert t[(1, 1)] == 1
    assert t[(3, 1)] == F(1, 6)
    assert t[(5, 1)] == F(1, 120) and t[(5, 2)] == F(2, 120)
    assert t[(7, 1)] == F(1, 5040)
    assert t[(7, 2)] == F(20, 5040)
    assert t[(7, 3)] == F(24, 5040)
    assert hat_families["a"].audits["pattern_exceptions"] in ([], [(1, 1)])


def test_wrong_ansatz_is_inconsistent():
    # pinning a coefficient off the value forced by the seeds must surface as
    # an inconsistent overdetermined system (rescalings cannot absorb it)
    from frobwdvv.solver import p1xp1_family
    fam = p1xp1_family(4)
    fam.seeds[("N", 1, 1)] = F(5)
    with pytest.raises(InconsistentSystemError):
        solve_slot_family(fam, 4, 3)


def test_prefix_stability_univariate():
    for fn in (recursion_nd, recursion_ck, recursion_mk, recursion_qk, recursion_wk):
        small = fn(4).table()
        large = fn(7).table()
        for k, v in small.items():
            assert large[k] == v, fn.__name__


def test_qk_deeper_printed_tail():
    # power-tail coefficients of the displayed transformed potential: the
    # (k+2)-th power terms carry Q_k directly
    t = recursion_qk(6).table()
    assert [t[k] for k in range(1, 7)] == [
        F(-1), F(7, 2), F(-23), F(201), F(-10368, 5), F(23871)]
