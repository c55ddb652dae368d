from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import ANOSOV_ENDO, CAT, DOUBLE
from expobs.torus import (
    Classification,
    IntegerMatrix,
    NonHyperbolicError,
    SingularMatrixError,
    SystemDescriptor,
    TorusPoint,
    apply,
    classify,
    kernel_elements,
    local_injectivity_probe,
    orbit,
    periodic_point_count,
    preimages,
    smith_normal_form,
)
from oracles import invariant_factors, rational_fixed_points, rational_kernel

F = Fraction


def pt(*vals):
    return TorusPoint.from_fractions(vals)


def test_apply_examples():
    S = SystemDescriptor.toral(DOUBLE)
    assert apply(S, pt(0, 0)) == pt(0, 0)
    assert apply(S, pt(F(1, 2), F(1, 2))) == pt(0, 0)
    assert apply(SystemDescriptor.toral(ANOSOV_ENDO), pt(F(1, 2), 0)) == pt(F(1, 2), F(1, 2))


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(SystemDescriptor.toral(DOUBLE), pt(F(1, 3)))


def test_float_path_reduces_mod_one():
    x = apply(SystemDescriptor.toral(ANOSOV_ENDO), TorusPoint.from_floats([0.9, 0.8]))
    assert all(0 <= c < 1 for c in x.coords)
    np.testing.assert_allclose(x.coords, [(3 * 0.9 + 0.8) % 1, (0.9 + 0.8) % 1])


def test_orbit_examples():
    C = SystemDescriptor.circle_power(2)
    assert orbit(C, pt(0), 3) == [pt(0)] * 4
    assert orbit(C, pt(F(1, 8)), 3) == [pt(F(1, 8)), pt(F(1, 4)), pt(F(1, 2)), pt(0)]
    S = SystemDescriptor.toral(CAT)
    assert orbit(S, pt(0, F(1, 2)), 2) == [pt(0, F(1, 2)), pt(F(1, 2), F(1, 2)), pt(F(1, 2), 0)]


def test_point_parsing_and_views():
    p = TorusPoint.parse(["3/2", "0.25", "-1/3"])
    assert p.fractions() == (F(1, 2), F(1, 4), F(2, 3))
    assert max(abs(a - float(b)) for a, b in zip(p.coords, p.fractions())) < 1e-12
    assert p.labels() == ["1/2", "1/4", "2/3"]


small_ints = st.integers(min_value=-4, max_value=4)


@st.composite
def nonsingular(draw, dim=None):
    d = dim or draw(st.integers(min_value=1, max_value=3))
    rows = draw(st.lists(st.lists(small_ints, min_size=d, max_size=d), min_size=d, max_size=d))
    m = IntegerMatrix(rows)
    assume(m.det() != 0)
    return m


@st.composite
def rational_point(draw, dim):
    den = draw(st.integers(min_value=1, max_value=60))
    nums = draw(st.lists(st.integers(min_value=0, max_value=den - 1), min_size=dim, max_size=dim))
    return TorusPoint.from_rational(nums, den)


@given(nonsingular())
@settings(max_examples=80, deadline=None)
def test_smith_normal_form_invariants(A):
    U, S, V = smith_normal_form(A)
    assert (U @ S @ V) == A
    assert abs(U.det()) == 1 and abs(V.det()) == 1
    diag = [S.entries[i][i] for i in range(A.dim)]
    assert all(S.entries[i][j] == 0 for i in range(A.dim) for j in range(A.dim) if i != j)
    assert all(s > 0 for s in diag)
    assert all(diag[i + 1] % diag[i] == 0 for i in range(A.dim - 1))
    assert diag == invariant_factors(A.tolist())


def test_smith_examples():
    I2 = IntegerMatrix.identity(2)
    assert smith_normal_form(I2) == (I2, I2, I2)
    assert smith_normal_form(DOUBLE)[1] == IntegerMatrix([[2, 0], [0, 2]])
    assert smith_normal_form(ANOSOV_ENDO)[1] == IntegerMatrix([[1, 0], [0, 2]])
    with pytest.raises(SingularMatrixError):
        smith_normal_form([[1, 2], [2, 4]])


@pytest.mark.parametrize("A,size", [(CAT, 1), (DOUBLE, 4), (ANOSOV_ENDO, 2), ([[4, 6], [2, 9]], 24)])
def test_kernel_matches_rational_enumeration(A, size):
    ker = kernel_elements(A)
    assert len(ker) == size
    assert ker[0].is_zero()
    assert {p.fractions() for p in ker} == rational_kernel(A)


def test_kernel_of_doubling_explicit():
    assert set(kernel_elements(DOUBLE)) == {pt(0, 0), pt(F(1, 2), 0), pt(0, F(1, 2)), pt(F(1, 2), F(1, 2))}


@given(nonsingular())
@settings(max_examples=60, deadline=None)
def test_kernel_properties(A):
    ker = kernel_elements(A)
    D = abs(A.det())
    assert len(ker) == len(set(ker)) == D
    for p in ker:
        assert D % p.denominator == 0
        assert all(v % p.denominator == 0 for v in A @ p.numerators)


@pytest.mark.parametrize("n,count", [(1, 1), (2, 3)])
def test_periodic_count_circle(n, count):
    assert periodic_point_count([[2]], n) == count


@pytest.mark.parametrize("A", [CAT, DOUBLE, ANOSOV_ENDO, [[2]], [[3]], [[0, 1], [-1, 1]]])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_periodic_count_oracle(A, n):
    # [[0, 1], [-1, 1]] has order 6, so levels 1..4 are still finite
    assert periodic_point_count(A, n) == rational_fixed_points(A, n)


def test_periodic_count_rejects_degenerate_level():
    with pytest.raises(NonHyperbolicError):
        periodic_point_count([[0, 1], [-1, 1]], 6)
    with pytest.raises(NonHyperbolicError):
        periodic_point_count([[1, 0], [0, 1]], 1)


def test_classify_reference_matrices():
    assert classify(CAT) is Classification.ANOSOV_DIFFEO
    assert classify(DOUBLE) is Classification.EXPANDING
    assert classify(ANOSOV_ENDO) is Classification.ANOSOV_ENDO
    assert classify([[1, 0], [0, 1]]) is Classification.NON_HYPERBOLIC
    assert classify([[0, 1], [-1, 1]]) is Classification.NON_HYPERBOLIC
    assert classify([[-3]]) is Classification.EXPANDING


@given(nonsingular(dim=2), rational_point(2), st.integers(0, 5), st.integers(0, 5))
@settings(max_examples=60, deadline=None)
def test_orbit_semigroup_law(A, x, m, n):
    S = SystemDescriptor.toral(A)
    long = orbit(S, x, m + n)
    assert long[m:] == orbit(S, long[m], n)


@given(nonsingular(dim=2), rational_point(2))
@settings(max_examples=60, deadline=None)
def test_apply_exact_denominators_do_not_grow(A, x):
    y = apply(SystemDescriptor.toral(A), x)
    assert y.is_exact and x.denominator % y.denominator == 0


def test_preimages_map_onto_target():
    S = SystemDescriptor.toral(ANOSOV_ENDO)
    w = pt(F(1, 3), F(1, 5))
    pre = preimages(S, w)
    assert len(pre) == 2 and all(apply(S, p) == w for p in pre)
    T = SystemDescriptor.two_circles()
    w = TorusPoint.from_fractions([F(1, 6)], circle=1)
    assert all(apply(T, p) == w for p in preimages(T, w))
    assert preimages(T, TorusPoint.from_fractions([F(1, 6)], circle=2)) == []


def test_two_circles_dynamics():
    T = SystemDescriptor.two_circles()
    assert T.dim == 1
    # X2 is carried onto X1; the junction z = 1 is fixed
    assert apply(T, TorusPoint.from_fractions([F(1, 4)], circle=2)) == TorusPoint.from_fractions([F(3, 4)], circle=1)
    assert apply(T, TorusPoint.from_fractions([F(1, 2)], circle=2)) == TorusPoint.from_fractions([0], circle=1)


def test_local_injectivity_toral_passes():
    for A in (CAT, DOUBLE, ANOSOV_ENDO):
        r = local_injectivity_probe(SystemDescriptor.toral(A), 0.1, 300, seed=1)
        assert r.passed and r.witness is None
        assert r.metric == "torus-sup"


def test_local_injectivity_two_circles_violation():
    r = local_injectivity_probe(SystemDescriptor.two_circles(), 0.05, 300, seed=1)
    assert not r.passed
    x, y = r.witness
    T = SystemDescriptor.two_circles()
    assert x != y and {x.circle, y.circle} == {1, 2}
    assert abs(apply(T, x).coords[0] - apply(T, y).coords[0]) % 1.0 < 1e-10 or \
        abs(abs(apply(T, x).coords[0] - apply(T, y).coords[0]) - 1) < 1e-10


def test_local_injectivity_doubling_below_half_turn():
    assert local_injectivity_probe(SystemDescriptor.circle_power(2), 0.2, 300).passed
    assert local_injectivity_probe(SystemDescriptor.circle_power(2), 0.49, 300).passed


def test_system_validation():
    with pytest.raises(ValueError):
        SystemDescriptor.circle_power(0)
    with pytest.raises(SingularMatrixError):
        SystemDescriptor.toral([[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        IntegerMatrix([[1, 2]])
