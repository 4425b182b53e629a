import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convexchar import iter_engine as ie
from convexchar.sp_core import BlockLabel

S2 = math.sqrt(2) - 1
S3 = math.sqrt(3) - 1


def E(a):
    return math.ceil(a)


# -- integer parts -----------------------------------------------------------

@pytest.mark.parametrize(
    "a, fl, ce, ph",
    [(1.2, 1, 2, 1), (2, 2, 2, 0), (-0.5, -1, 0, 1), (Fraction(7, 3), 2, 3, 1), (Fraction(6, 3), 2, 2, 0)],
)
def test_floor_ceil_phi(a, fl, ce, ph):
    assert (ie.floor_int(a), ie.ceil_int(a), ie.phi(a)) == (fl, ce, ph)


def test_phi_warns_near_integer_float():
    with pytest.warns(ie.NearIntegerWarning):
        assert ie.phi(3 + 1e-12) == 1


# -- profiles ----------------------------------------------------------------

def test_profile_requires_leading_positive_jordan():
    with pytest.raises(ie.ProfileError):
        ie.MonodromyProfile(3, (BlockLabel.R(1.0), BlockLabel.N1(1, 1), BlockLabel.hyp(2.0)))


def test_profile_dimension_mismatch():
    with pytest.raises(ie.ProfileError):
        ie.MonodromyProfile(3, (BlockLabel.N1(1, 1), BlockLabel.R(1.0)), ie.R_FAMILY, 3)


def test_profile_family_block_mismatch():
    with pytest.raises(ie.ProfileError):
        ie.MonodromyProfile(3, (BlockLabel.N1(1, 1), BlockLabel.R(1.0), BlockLabel.hyp(2.0)), ie.DOUBLE_N1MINUS)
    with pytest.raises(ie.ProfileError):
        ie.MonodromyProfile(3, (BlockLabel.N1(1, 1), BlockLabel.N1(1, -1), BlockLabel.R(1.0)), ie.R_FAMILY)


def test_convexity_flag_recorded_not_enforced():
    p = ie.r_profile(1, [S2], [2.0])
    assert not p.convex_provenance
    assert ie.iterate(p, 1).i_maslov == 1


# -- iteration examples ------------------------------------------------------

def test_double_negative_jordan_second_iterate():
    r = ie.iterate(ie.double_profile(3), 2)
    assert r.i_ekeland == 4 and r.nu == 3


def test_rotation_hyperbolic_first_iterate():
    assert ie.iterate(ie.r_profile(3, [S2], [2.0]), 1).i_maslov == 3


def test_rotation_hyperbolic_second_iterate():
    r = ie.iterate(ie.r_profile(3, [S2], [2.0]), 2)
    assert r.i_maslov == 6 and r.i_ekeland == 3


def test_case3_second_iterate_nullity():
    assert ie.iterate(ie.case3_profile(3, S2), 2).nu == 2


def test_case2_gives_nullity_only():
    p = ie.MonodromyProfile(3, (BlockLabel.N1(1, 1), BlockLabel.R(1.0), BlockLabel.N1(1, -1)), ie.CASE2)
    r = ie.iterate(p, 4)
    assert r.i_maslov is None and r.nu == 2
    with pytest.raises(ie.UnsupportedFamilyError):
        ie.mean_index(p)
    with pytest.raises(ie.UnsupportedFamilyError):
        ie.minimal_period_K(p)


def test_iterate_rejects_nonpositive_m():
    with pytest.raises(ValueError):
        ie.iterate(ie.double_profile(), 0)


def test_to_json_row():
    assert ie.iterate(ie.double_profile(), 3).to_json() == {"m": 3, "i_maslov": 11, "nu": 3, "i_ekeland": 8}


# -- independent instance formulas (integer equality) ------------------------

def two_rotation_instance(i1, t1, t2, m):
    return m * (i1 - 1) + 2 * E(m * t1) + 2 * E(m * t2) - 3, 3 - 2 * ie.phi(m * t2)


def rotation_hyp_instance_ekeland(i_ek, t, m):
    return m * (i_ek + 3) + 2 * E(m * t) - 5


def case3_instance(i1, t, m):
    return m * i1 + 2 * E(m * t) - 2, 1 + (1 + (-1) ** m) // 2


@pytest.mark.parametrize("i1, t1, L, N", [(3, S2, 3, 7), (5, S3, 1, 2), (7, 0.123, 2, 5)])
def test_two_rotation_instance(i1, t1, L, N):
    p = ie.r_profile(i1, [t1, Fraction(L, N)])
    for m in range(1, 101):
        r = ie.iterate(p, m)
        assert (r.i_maslov, r.nu) == two_rotation_instance(i1, t1, Fraction(L, N), m)


@pytest.mark.parametrize("i_ek, t", [(0, S2), (2, S3), (5, 1 / math.pi)])
def test_rotation_hyperbolic_instance(i_ek, t):
    p = ie.r_profile(i_ek + 3, [t], [-2.0])
    for m in range(1, 101):
        r = ie.iterate(p, m)
        assert r.i_ekeland == rotation_hyp_instance_ekeland(i_ek, t, m)
        assert r.nu == 1


def test_case3_instance():
    p = ie.case3_profile(5, S3)
    for m in range(1, 101):
        r = ie.iterate(p, m)
        assert (r.i_maslov, r.nu) == case3_instance(5, S3, m)


def test_double_instance():
    p = ie.double_profile(3)
    assert [ie.iterate(p, m).i_ekeland for m in range(1, 101)] == [4 * m - 4 for m in range(1, 101)]


# -- properties --------------------------------------------------------------

turn = st.one_of(
    st.floats(0.01, 0.99).filter(lambda x: abs(x - 0.5) > 1e-3),
    st.builds(Fraction, st.integers(1, 12), st.integers(2, 13)).filter(lambda f: 0 < f < 1 and f != Fraction(1, 2)),
)
minus_block = st.sampled_from([BlockLabel.N1(-1, 0), BlockLabel.N1(-1, -1)])


@st.composite
def r_profiles(draw):
    i1 = draw(st.integers(1, 11))
    blocks = [BlockLabel.N1(1, 1)]
    for _ in range(2):
        kind = draw(st.sampled_from(["R", "hyp", "minus"]))
        if kind == "R":
            t = draw(turn)
            blocks.append(BlockLabel.R(0.0, frac=t) if isinstance(t, Fraction) else BlockLabel.R(2 * math.pi * t))
        elif kind == "hyp":
            blocks.append(BlockLabel.hyp(draw(st.sampled_from([2.0, -3.0]))))
        else:
            blocks.append(draw(minus_block))
    return ie.MonodromyProfile(i1, tuple(blocks), ie.R_FAMILY, 3)


@st.composite
def profiles(draw):
    kind = draw(st.sampled_from(["r", "case3", "double"]))
    if kind == "r":
        return draw(r_profiles())
    if kind == "case3":
        return ie.case3_profile(draw(st.integers(1, 11)), draw(turn))
    return ie.double_profile(draw(st.integers(1, 11)))


@given(profiles())
def test_first_iterate_reproduces_i1(p):
    assert ie.iterate(p, 1).i_maslov == p.i1


@given(profiles(), st.integers(1, 200))
def test_ekeland_is_maslov_minus_n(p, m):
    r = ie.iterate(p, m)
    assert r.i_ekeland == r.i_maslov - p.n
    assert 1 <= r.nu <= 2 * p.n - 1


@given(profiles())
def test_nullity_table_matches_kernel_oracle(p):
    a = p.matrix()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ie.NearIntegerWarning)
        for m in range(1, 51):
            assert ie.iterate(p, m).nu == ie.nu_from_matrix(a, m)


@given(profiles())
def test_mean_index_limit(p):
    m = 10_000
    mi = ie.mean_index(p).value
    with warnings.catch_warnings():
        # float turns can land near an integer at this m; the limit is unaffected
        warnings.simplefilter("ignore", ie.NearIntegerWarning)
        i_m = ie.iterate(p, m).i_ekeland
    assert abs(mi - i_m / m) < 10 / m


@given(profiles().filter(lambda p: p.convex_provenance))
def test_mean_index_above_two_for_convex_provenance(p):
    assert ie.mean_index(p).value > 2


@given(r_profiles().filter(lambda p: p.i1 >= 3))
def test_monotone_for_convex_provenance(p):
    assert ie.index_monotonicity_check(p, 60).holds


# -- nullity oracle ----------------------------------------------------------

def test_nu_oracle_examples():
    eye4 = [BlockLabel.N1(1, 0)] * 2
    from convexchar.sp_core import assemble

    assert ie.nu_from_matrix(assemble([BlockLabel.N1(1, 1)] + eye4), 5) == 5
    assert ie.nu_from_matrix(BlockLabel.N1(1, 1).matrix(), 5) == 1
    assert ie.nu_from_matrix(BlockLabel.R(0.0, frac=Fraction(3, 7)).matrix(), 7) == 2
    assert ie.nu_from_matrix(BlockLabel.N1(-1, 1).matrix(), 2) == 1


def test_nu_oracle_borderline_warns():
    with pytest.warns(ie.NearIntegerWarning):
        ie.nu_from_matrix(BlockLabel.R(2e-6).matrix(), 1)


def test_nu_oracle_large_power_with_hyperbolic_block():
    from convexchar.sp_core import assemble

    a = assemble([BlockLabel.N1(1, 1), BlockLabel.R(1.5 * math.pi), BlockLabel.hyp(-3.0)])
    assert ie.nu_from_matrix(a, 35) == 1
    assert ie.nu_from_matrix(a, 36) == 3


# -- mean index --------------------------------------------------------------

def test_mean_index_double():
    mi = ie.mean_index(ie.double_profile(3))
    assert mi.exact == 4 and mi.rational


def test_mean_index_rotation_hyperbolic():
    mi = ie.mean_index(ie.r_profile(3, [S2], [2.0]))
    assert mi.value == pytest.approx(3 + 2 * S2, abs=1e-14)
    assert not mi.rational


def test_mean_index_two_rotations_against_long_iterate():
    p = ie.r_profile(5, [S2, S3])
    closed = 4 + 2 * S2 + 2 * S3
    assert ie.mean_index(p).value == pytest.approx(closed, abs=1e-14)
    m = 10**6
    assert abs(ie.iterate(p, m).i_maslov / m - closed) < 1e-5


def test_mean_index_exact_for_declared_rational():
    mi = ie.mean_index(ie.r_profile(5, [0.2, Fraction(3, 7)]))
    assert mi.exact == 4 + Fraction(2, 5) + Fraction(6, 7)


# -- minimal period ----------------------------------------------------------

def test_K_case4():
    assert ie.minimal_period_K(ie.r_profile(5, [S2, Fraction(3, 7)])) == 7


def test_K_case3():
    assert ie.minimal_period_K(ie.case3_profile(3, S2)) == 2


def test_K_double():
    assert ie.minimal_period_K(ie.double_profile(3)) == 1


def test_K_irrational_only():
    # no degenerate iterates; K is fixed by the parity of the index increment
    assert ie.minimal_period_K(ie.r_profile(3, [S2], [2.0])) == 2
    assert ie.minimal_period_K(ie.r_profile(4, [S2], [2.0])) == 1


@given(r_profiles())
def test_K_is_a_period(p):
    K = ie.minimal_period_K(p)
    for m in range(1, 40):
        a, b = ie.iterate(p, m), ie.iterate(p, m + K)
        assert a.nu == b.nu and (b.i_ekeland - a.i_ekeland) % 2 == 0


# -- rationality -------------------------------------------------------------

def test_rational_three_quarters():
    v = ie.rationality_test(0.75, q_max=100)
    assert v.rational and v.value == Fraction(3, 4)
    assert str(v) == "rational(3/4)"


def test_sqrt2_minus_one_not_rational_below_bound():
    v = ie.rationality_test(S2, q_max=10_000, tol=1e-10)
    assert not v.rational
    assert str(v) == "no-rational-below(10000)"


def test_rational_within_tolerance():
    v = ie.rationality_test(2 / 7 + 1e-13, q_max=100, tol=1e-10)
    assert v.value == Fraction(2, 7)


def test_rationality_input_checks():
    with pytest.raises(ValueError):
        ie.rationality_test(0.5, q_max=0)


@given(st.integers(1, 99), st.integers(1, 100))
def test_rationality_recovers_small_fractions(p, q):
    f = Fraction(p, q)
    assert ie.rationality_test(float(f), q_max=100).value == f


# -- monotonicity ------------------------------------------------------------

def test_monotone_double():
    assert ie.index_monotonicity_check(ie.double_profile(3), 50).holds


def test_monotone_single_rotation():
    assert ie.index_monotonicity_check(ie.r_profile(3, [S2], [2.0]), 100).holds


def test_monotonicity_failure_cites_m():
    rep = ie.index_monotonicity_check(ie.r_profile(1, [0.9, 0.8]), 20)
    assert not rep.holds
    assert rep.first_violation == 9
    assert "i(9)" in rep.detail


# -- common index jump -------------------------------------------------------

def test_jump_double():
    profiles = [ie.double_profile(3)]
    cert = ie.common_jump_search(profiles, 1000)
    assert cert.valid and cert.T % 4 == 0
    assert ie.verify_certificate(profiles, cert)


def test_jump_two_rotations():
    profiles = [ie.r_profile(3, [S2 / 2], [2.0]), ie.r_profile(3, [S3 / 2], [2.0])]
    cert = ie.common_jump_search(profiles, 10**5)
    assert cert.valid and ie.verify_certificate(profiles, cert)
    for p, m in zip(profiles, cert.m_list):
        r = ie.iterate(p, 2 * m)
        assert r.i_maslov >= 2 * cert.T - 3


def test_jump_empty_list():
    with pytest.raises(ValueError):
        ie.common_jump_search([], 10)


def test_jump_exhaustion_records_near_miss():
    with pytest.raises(ie.JumpSearchExhausted) as info:
        ie.common_jump_search([ie.double_profile(3)], 3)
    assert info.value.near_miss is not None
