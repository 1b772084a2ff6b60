import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signcov.kernel import (
    MAX_JOINT_SUPPORT,
    Classification,
    Quadruple,
    a_sign,
    classify,
    cvm_c,
    g_discrete,
    h1_bruteforce,
    h1_bruteforce_joint,
    h2_uniform,
    h_kernel,
    h_kernel_by_average,
    kernel_codes,
)
from signcov.spectrum import DiscreteMarginal, r_matrix

small_int = st.integers(min_value=0, max_value=4)
quad = st.lists(st.tuples(small_int, small_int), min_size=4, max_size=4)


def test_a_sign_cases():
    assert a_sign(1, 3, 2, 4) == 1
    assert a_sign(3, 1, 4, 2) == 1
    assert a_sign(1, 2, 3, 4) == -1
    assert a_sign(1, 1, 2, 3) == -1
    assert a_sign(1, 2, 1, 2) == 1
    assert a_sign(1, 1, 1, 1) == 0
    with pytest.raises(ValueError):
        a_sign(1, 2, math.nan, 4)


@pytest.mark.parametrize(
    "points, expected",
    [
        ([(1, 1), (2, 2), (3, 3), (4, 4)], Classification.CONCORDANT),
        ([(1, 4), (2, 3), (3, 2), (4, 1)], Classification.CONCORDANT),
        ([(1, 1), (2, 3), (3, 2), (4, 4)], Classification.DISCORDANT),
        ([(1, 1), (2, 2), (2, 3), (4, 4)], Classification.INSEPARABLE),
        ([(1, 1), (2, 2), (3, 2), (4, 4)], Classification.INSEPARABLE),
        ([(1, 1), (1, 2), (3, 3), (3, 4)], Classification.CONCORDANT),
    ],
)
def test_classify_hand_examples(points, expected):
    assert classify(points) is expected
    assert h_kernel(points) == expected.value_fraction


def test_kernel_values():
    assert [c.value_fraction for c in Classification] == [Fraction(2, 3), Fraction(-1, 3), Fraction(0)]


@settings(max_examples=300, deadline=None)
@given(quad)
def test_kernel_equals_permutation_average(points):
    assert h_kernel(points) == h_kernel_by_average(points)


@settings(max_examples=100, deadline=None)
@given(quad, st.permutations(range(4)))
def test_kernel_symmetric(points, perm):
    assert h_kernel(points) == h_kernel([points[i] for i in perm])


@settings(max_examples=100, deadline=None)
@given(quad)
def test_kernel_invariant_under_increasing_maps(points):
    mapped = [(math.exp(x), 2.0 * y**3 + 1.0) for x, y in points]
    assert h_kernel(points) == h_kernel(mapped)


def test_kernel_codes_match_scalar():
    rng = np.random.default_rng(5)
    xs = rng.integers(0, 4, (500, 4)).astype(float)
    ys = rng.integers(0, 4, (500, 4)).astype(float)
    codes = kernel_codes(xs, ys)
    for r in range(500):
        assert Fraction(int(codes[r]), 3) == h_kernel(Quadruple.from_xy(xs[r], ys[r]))


def test_quadruple_validation():
    with pytest.raises(ValueError):
        Quadruple(((0, 0), (1, 1), (2, 2)))
    with pytest.raises(ValueError):
        Quadruple(((0, 0), (1, 1), (2, 2), (math.inf, 0)))


def test_cvm_c_domain_and_mean_zero():
    with pytest.raises(ValueError):
        cvm_c(1.5, 0.2)
    # integrates to zero in each argument
    u = (np.arange(20000) + 0.5) / 20000
    assert abs(np.mean([cvm_c(0.3, v) for v in u])) < 1e-8


def test_h2_uniform_matches_monte_carlo():
    # E[h(z1, z2, Z3, Z4)] with Z3, Z4 independent uniforms
    rng = np.random.default_rng(11)
    m = 400_000
    for z1, z2 in [((0.1, 0.2), (0.8, 0.9)), ((0.5, 0.1), (0.2, 0.7))]:
        xs = np.column_stack([np.full(m, z1[0]), np.full(m, z2[0]), rng.random(m), rng.random(m)])
        ys = np.column_stack([np.full(m, z1[1]), np.full(m, z2[1]), rng.random(m), rng.random(m)])
        mc = kernel_codes(xs, ys).mean() / 3
        se = kernel_codes(xs, ys).std() / 3 / math.sqrt(m)
        assert abs(mc - h2_uniform(z1, z2)) < 4 * se


def test_g_discrete_matches_r_matrix():
    m = DiscreteMarginal((0.0, 1.5, 2.0, 7.0), (0.1, 0.4, 0.3, 0.2))
    R = r_matrix(m)
    for i, u in enumerate(m.support):
        for j, v in enumerate(m.support):
            expected = -math.sqrt(m.masses[i] * m.masses[j]) * g_discrete(u, v, m)
            assert R[i, j] == pytest.approx(expected, abs=1e-14)


def test_h1_vanishes_under_independence():
    mx = DiscreteMarginal.from_masses([0.2, 0.5, 0.3])
    my = DiscreteMarginal.from_masses([0.6, 0.4])
    for x, y in itertools.product(mx.support, my.support):
        assert abs(h1_bruteforce(x, y, mx, my)) < 1e-14


def test_h1_averages_to_tau_star():
    pts = [(1, 1), (2, 2), (3, 3), (1, 3)]
    masses = [0.3, 0.3, 0.2, 0.2]
    h1 = [h1_bruteforce_joint(x, y, pts, masses) for x, y in pts]
    # oracle: tau* = E h over all 4^4 ordered draws from the joint law
    tau = sum(
        masses[a] * masses[b] * masses[c] * masses[d] * float(h_kernel([pts[a], pts[b], pts[c], pts[d]]))
        for a, b, c, d in itertools.product(range(4), repeat=4)
    )
    assert np.dot(masses, h1) == pytest.approx(tau, abs=1e-14)
    assert tau > 0


def test_h1_support_cap():
    pts = [(i, i) for i in range(MAX_JOINT_SUPPORT + 1)]
    with pytest.raises(ValueError):
        h1_bruteforce_joint(0, 0, pts, [1 / len(pts)] * len(pts))
