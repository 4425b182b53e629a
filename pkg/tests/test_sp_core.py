import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from convexchar import sp_core as sp
from convexchar.sp_core import BlockLabel


def conjugate(a, rng, spread=0.5):
    p = sp.random_symplectic(a.shape[0] // 2, rng, spread)
    return np.linalg.solve(p, a @ p)


# -- standard form -----------------------------------------------------------

def test_standard_form_n1():
    assert np.array_equal(sp.standard_form(1), np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_standard_form_squares_to_minus_identity():
    j = sp.standard_form(1)
    assert np.array_equal(j @ j, -np.eye(2))


def test_standard_form_orthogonal_n3():
    j = sp.standard_form(3)
    assert np.array_equal(j.T @ j, np.eye(6))


def test_standard_form_rejects_zero():
    with pytest.raises(ValueError):
        sp.standard_form(0)


# -- acceptance of matrices --------------------------------------------------

def test_non_symplectic_rejected():
    with pytest.raises(sp.NotSymplecticError):
        sp.SymplecticMatrix.from_array(np.diag([2.0, 2.0]))


def test_non_square_rejected():
    with pytest.raises(ValueError):
        sp.SymplecticMatrix.from_array(np.ones((2, 3)))


def test_accepted_matrix_reports_residual(rng):
    m = sp.SymplecticMatrix.from_array(sp.random_symplectic(3, rng))
    assert m.n == 3
    assert m.sympl_residual <= 1e-9
    assert abs(np.linalg.det(m.entries) - 1) <= 1e-7


# -- Floquet multipliers -----------------------------------------------------

def test_multipliers_of_identity():
    lam = sp.floquet_multipliers(np.eye(6))
    assert np.allclose(lam, 1.0)
    assert len(lam) == 6


def test_multipliers_of_hyperbolic_block():
    lam = sorted(sp.floquet_multipliers(sp.hyperbolic(2.0)).real)
    assert lam == pytest.approx([0.5, 2.0], abs=1e-14)


def test_multipliers_of_rotation():
    lam = sp.floquet_multipliers(sp.rotation(math.pi / 3))
    want = [np.exp(-1j * math.pi / 3), np.exp(1j * math.pi / 3)]
    assert np.allclose(lam, want, atol=1e-14)


def test_ill_conditioned_matrix_raises():
    with pytest.raises(sp.IllConditionedError):
        sp.floquet_multipliers(sp.hyperbolic(1e7))


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_spectrum_closed_under_inverse_and_conjugation(seed, n):
    rng = np.random.default_rng(seed)
    lam = sp.floquet_multipliers(sp.random_symplectic(n, rng, 0.7))
    for z in lam:
        assert np.min(np.abs(lam - 1 / z)) < 1e-7 * max(1, abs(1 / z))
        assert np.min(np.abs(lam - np.conj(z))) < 1e-7 * max(1, abs(z))


@given(st.integers(0, 2**32 - 1))
def test_multipliers_invariant_under_conjugation(seed):
    rng = np.random.default_rng(seed)
    blocks = [sp.rotation(rng.uniform(0.1, 3.0)), sp.hyperbolic(rng.uniform(1.5, 3)), sp.rotation(rng.uniform(3.3, 6.1))]
    a = sp.diamond(*blocks)
    p = sp.random_symplectic(3, rng, 0.3)
    if np.linalg.cond(p) >= 1e3:
        return
    b = np.linalg.solve(p, a @ p)
    la = np.sort_complex(sp.floquet_multipliers(a))
    lb = np.sort_complex(sp.floquet_multipliers(b))
    assert np.max(np.abs(la - lb)) < 1e-6


# -- elliptic height ---------------------------------------------------------

def test_height_of_identity():
    assert sp.elliptic_height(np.eye(6)) == 6


def test_height_with_one_hyperbolic_pair():
    a = sp.diamond(sp.n1(1, 1), sp.rotation(1.1), sp.hyperbolic(2.0))
    assert sp.elliptic_height(a) == 4


def test_height_of_elliptic_matrix(rng):
    a = conjugate(sp.diamond(sp.rotation(0.4), sp.rotation(2.5), sp.rotation(5.0)), rng)
    assert sp.elliptic_height(a) == 6


def test_height_ambiguity_warns():
    a = sp.diamond(sp.complex_quadruple((1 + 8e-8) * np.exp(1j)), sp.rotation(2.0))
    with pytest.warns(sp.SpectralAmbiguityWarning):
        sp.elliptic_height(a)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_height_even_and_bounded(seed, n):
    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp.SpectralAmbiguityWarning)
        e = sp.elliptic_height(sp.random_symplectic(n, rng, 0.8))
    assert e % 2 == 0 and 0 <= e <= 2 * n


# -- block classification ----------------------------------------------------

def test_classify_conjugated_mixed_blocks(rng):
    a = conjugate(sp.diamond(sp.n1(1, 1), sp.rotation(2.0), sp.hyperbolic(2.0)), rng)
    dec = sp.classify_blocks(a)
    want = [BlockLabel.N1(1, 1), BlockLabel.R(2.0), BlockLabel.hyp(2.0)]
    assert dec.complete
    assert sp.same_multiset(dec.blocks, want)


def test_classify_double_negative_jordan():
    a = sp.diamond(sp.n1(1, -1), sp.n1(1, -1))
    dec = sp.classify_blocks(a)
    assert sp.same_multiset(dec.blocks, [BlockLabel.N1(1, -1)] * 2)


def test_classify_orientation_of_rotation():
    # R(theta) and R(2pi - theta) share eigenvalues; the Krein sign separates them
    for theta in (0.7, 2 * math.pi - 0.7):
        dec = sp.classify_blocks(sp.rotation(theta))
        assert dec.blocks[0].theta == pytest.approx(theta, abs=1e-9)


def test_classify_ellipsoid_monodromy_from_exponential():
    radii = np.array([1.0, 2 ** 0.25, 3 ** 0.25])
    # linearized flow of H = sum (x_k^2 + y_k^2)/r_k^2 is constant: exp(tau J H'')
    hess = np.diag(np.tile(2 / radii**2, 2))
    tau = math.pi * radii[0] ** 2
    gamma = expm(tau * sp.standard_form(3) @ hess)
    dec = sp.classify_blocks(gamma)
    thetas = [2 * math.pi * ((radii[0] ** 2 / r**2) % 1) for r in radii[1:]]
    want = [BlockLabel.N1(1, 0)] + [BlockLabel.R(t) for t in thetas]
    assert dec.complete
    assert sp.same_multiset(dec.blocks, want)


def test_deep_jordan_chain_goes_to_residual_report():
    # nilpotent Hamiltonian matrix with a Jordan chain of length 4 at 0
    n = np.array([[0.0, 1.0], [0.0, 0.0]])
    c = np.array([[1.0, 0.0], [0.0, 0.0]])
    h = np.block([[n, np.zeros((2, 2))], [c, -n.T]])
    a = sp.diamond(expm(h), sp.rotation(1.3))
    assert np.linalg.matrix_rank(np.linalg.matrix_power(h, 3)) == 1
    dec = sp.classify_blocks(a)
    assert not dec.complete
    assert "Jordan" in dec.residual_report[0]
    assert sp.same_multiset(dec.blocks, [BlockLabel.R(1.3)])


def test_complex_quadruple_classified(rng):
    lam = 1.7 * np.exp(0.6j)
    a = conjugate(sp.diamond(sp.complex_quadruple(lam), sp.rotation(1.0)), rng)
    dec = sp.classify_blocks(a)
    assert sp.same_multiset(dec.blocks, [BlockLabel.quad(lam), BlockLabel.R(1.0)])


def _random_blocks(rng, n):
    """A random list of normal-form blocks spanning 2n dimensions with separated spectra."""
    used_angles, used_hyp = [], []
    blocks, dims = [], 0
    while dims < 2 * n:
        kinds = ["N1", "R", "hyp"] + (["quad"] if 2 * n - dims >= 4 else [])
        kind = kinds[rng.integers(len(kinds))]
        if kind == "N1":
            blk = BlockLabel.N1(int(rng.choice([1, -1])), int(rng.choice([1, 0, -1])))
        elif kind == "R":
            while True:
                t = rng.uniform(0.05, 2 * math.pi - 0.05)
                angles = used_angles + [2 * math.pi - u for u in used_angles] + [math.pi]
                if min(abs(t - u) for u in angles) > 0.05:
                    break
            used_angles.append(t)
            blk = BlockLabel.R(t)
        elif kind == "hyp":
            while True:
                lam = rng.uniform(1.3, 4.0) * rng.choice([1, -1])
                if all(abs(lam - u) > 0.1 for u in used_hyp):
                    break
            used_hyp.append(lam)
            blk = BlockLabel.hyp(lam)
        else:
            blk = BlockLabel.quad(rng.uniform(1.3, 3.0) * np.exp(1j * rng.uniform(0.2, 2.9)))
        blocks.append(blk)
        dims += blk.dim
    return blocks


def test_round_trip_1000_random_assemblies():
    rng = np.random.default_rng(7)
    failures = []
    for trial in range(1000):
        blocks = _random_blocks(rng, 3)
        a = conjugate(sp.assemble(blocks), rng, spread=0.4)
        dec = sp.classify_blocks(a)
        if not (dec.complete and sp.same_multiset(dec.blocks, blocks, tol=1e-7)):
            failures.append((trial, blocks, dec.blocks, dec.residual_report))
    assert not failures, failures[:3]


@given(st.integers(0, 2**32 - 1))
def test_height_from_blocks_matches_matrix(seed):
    rng = np.random.default_rng(seed)
    blocks = _random_blocks(rng, 3)
    a = conjugate(sp.assemble(blocks), rng, spread=0.4)
    dec = sp.classify_blocks(a)
    assert dec.elliptic_height == sp.elliptic_height(a) == sum(b.elliptic_dim for b in blocks)


# -- splitting numbers -------------------------------------------------------

def test_splitting_positive_jordan():
    e = sp.splitting_data(BlockLabel.N1(1, 1))
    assert (e.s_plus, e.nu_one, e.jump) == (1, 1, 1)


def test_splitting_negative_jordan():
    e = sp.splitting_data(BlockLabel.N1(1, -1))
    assert (e.s_plus, e.nu_one, e.jump) == (0, 1, -1)


def test_splitting_aggregate_of_double_negative_jordan():
    assert sp.splitting_jump([BlockLabel.N1(1, -1)] * 2) == -2


@pytest.mark.parametrize("blk", [BlockLabel.N1(1, 0), BlockLabel.N1(-1, 1), BlockLabel.R(1.0), BlockLabel.hyp(2.0)])
def test_splitting_refuses_other_blocks(blk):
    with pytest.raises(sp.UnsupportedBlockError):
        sp.splitting_data(blk)
