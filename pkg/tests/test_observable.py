import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ANOSOV_ENDO, CAT, DOUBLE
from expobs.io import parse_example
from expobs.observable import (
    CharacterSum,
    CirclePiecewiseLinear,
    Constant,
    CoordinateEmbedding,
    InvertibleSystemError,
    PwlCircle,
    PwlProfile,
    build_character_observable,
    chord,
    compute_margins,
    delay,
    first_coordinate_character,
    last_nontrivial,
    min_separating_step,
    observable_from_dict,
    random_bumps,
    random_trig_polynomial,
    rho_weights,
    separation_floor,
    write_time_series,
)
from expobs.torus import SystemDescriptor, TorusPoint, kernel_elements

F = Fraction


def test_margins_and_weights_doubling():
    f = build_character_observable(DOUBLE)
    assert f.weights.margins == pytest.approx((1.8, 1.8), abs=1e-12)
    assert f.weights.rho == pytest.approx((1.0, 5 / 3), abs=1e-12)
    assert f.weights.floors == pytest.approx((1.8, 1.0), abs=1e-12)


def test_margins_anosov_endo():
    # ker = {0, (1/2, 1/2)}: nothing ends in coordinate 0
    f = build_character_observable(ANOSOV_ENDO)
    assert f.weights.margins == pytest.approx((2.0, 1.8), abs=1e-12)
    assert f.weights.floors == pytest.approx((2.0, 1.0), abs=1e-12)


def test_margins_by_direct_minimum():
    A = [[4, 6], [2, 9]]
    ker = [p for p in kernel_elements(A) if not p.is_zero()]
    expect = []
    for i in range(2):
        ch = [abs(1 - np.exp(2j * np.pi * float(p.fractions()[i]))) for p in ker if last_nontrivial(p) == i]
        expect.append(0.9 * min(ch) if ch else 2.0)
    assert compute_margins(ker, 2) == pytest.approx(tuple(expect), abs=1e-12)


def test_rho_example_and_errors():
    assert rho_weights([1, 1, 1]).rho == (1.0, 3.0, 9.0)
    with pytest.raises(ValueError):
        rho_weights([1.0, 0.0])
    with pytest.raises(InvertibleSystemError):
        build_character_observable(CAT)


@given(st.lists(st.floats(0.05, 2.0), min_size=1, max_size=6))
def test_rho_recurrence_residual(m):
    w = rho_weights(m)
    assert w.rho[0] == 1.0
    assert all(r < 1e-12 * max(1.0, max(w.rho)) for r in w.residuals())
    # every floor after the first is exactly one
    assert all(abs(fl - 1.0) < 1e-9 * max(w.rho) for fl in w.floors[1:])


def test_character_values():
    f = build_character_observable(DOUBLE)
    np.testing.assert_allclose(f(TorusPoint.from_fractions([0, 0])), [8 / 3, 0], atol=1e-12)
    np.testing.assert_allclose(f(TorusPoint.from_fractions([F(1, 2), F(1, 2)])), [-8 / 3, 0], atol=1e-12)


def test_floor_lower_bounds_brute_force():
    """min over a fine grid of |f(x) - f(x - a)| stays above the floor for every kernel offset."""
    for A in (DOUBLE, ANOSOV_ENDO, [[4, 6], [2, 9]]):
        f = build_character_observable(A)
        g = np.linspace(0, 1, 97, endpoint=False)
        X = np.array(np.meshgrid(g, g)).reshape(2, -1).T
        for a in kernel_elements(A)[1:]:
            gap = np.linalg.norm(f.evaluate(X) - f.evaluate((X - a.as_array()) % 1), axis=1)
            assert gap.min() >= separation_floor(f, a) - 1e-9
    with pytest.raises(ValueError):
        separation_floor(f, kernel_elements(DOUBLE)[0])


def test_chord():
    assert chord(0.5) == pytest.approx(2.0)
    assert chord(0.25) == pytest.approx(math.sqrt(2))


def test_pwl_examples():
    f = PwlCircle(PwlProfile(0.3))
    # 0.1 rad lies inside the flat arc
    assert f.angle(0.1 / (2 * math.pi)) == 0.0
    assert PwlProfile(0.3).h(2 * math.pi) == pytest.approx(2 * math.pi)
    with pytest.raises(ValueError):
        PwlProfile(0.0)


@given(st.floats(0.01, 6.0), st.floats(0.0, 1.0))
def test_pwl_flat_arc(eps, u):
    prof = PwlProfile(eps)
    f = PwlCircle(prof)
    theta = u * eps
    np.testing.assert_allclose(f.evaluate([[theta / (2 * math.pi)]]), [[1.0, 0.0]], atol=1e-15)
    # outside the arc the angle is strictly increasing
    a = f.angle(np.linspace(eps / (2 * math.pi) + 1e-6, 0.999, 50))
    assert np.all(np.diff(a) > 0)


@pytest.mark.parametrize("system", [SystemDescriptor.toral(ANOSOV_ENDO), SystemDescriptor.toral(CAT), SystemDescriptor.circle_power(3)])
def test_delay_consistency(system):
    rng = np.random.default_rng(0)
    base = CoordinateEmbedding(system.dim) if system.dim > 1 else PwlCircle()
    D = delay(base, system, 4)
    den = 7 * 2**20
    pts = [TorusPoint.from_rational(rng.integers(0, den, system.dim).tolist(), den) for _ in range(1000)]
    batch = D.evaluate(np.array([p.coords for p in pts]))
    single = np.array([D(p) for p in pts])
    assert batch.shape == (1000, base.output_dim * 5)
    np.testing.assert_allclose(batch, single, atol=1e-9)
    assert D.output_dim == base.output_dim * 5


def test_min_separating_step():
    S = SystemDescriptor.circle_power(2)
    f = CoordinateEmbedding(1)
    x, y = TorusPoint.from_fractions([F(1, 8)]), TorusPoint.from_fractions([F(5, 8)])
    assert min_separating_step(f, S, (x, y), 5) == 0
    pw = PwlCircle(PwlProfile(0.3))
    x = TorusPoint.from_floats([0.01 / (2 * math.pi)])
    y = TorusPoint.from_fractions([0])
    # 0.01 * 2^n first exceeds 0.3 at n = 5
    assert min_separating_step(pw, S, (x, y), 10) == 5
    assert min_separating_step(pw, S, (x, y), 4) is None
    with pytest.raises(ValueError):
        min_separating_step(pw, S, (x, y), -1)


def _all_kinds():
    rng = np.random.default_rng(4)
    S = SystemDescriptor.toral(DOUBLE)
    return [
        (build_character_observable(DOUBLE), 2),
        (PwlCircle(PwlProfile(0.4)), 1),
        (CoordinateEmbedding(2), 2),
        (Constant((1.0, 2.0)), 2),
        (random_trig_polynomial(2, rng), 2),
        (first_coordinate_character(3), 3),
        (CirclePiecewiseLinear((0.0, 0.25, 0.5), (0.0, 1.0, -1.0)), 1),
        (delay(CoordinateEmbedding(2), S, 2), 2),
    ]


@pytest.mark.parametrize("f,dim", _all_kinds(), ids=lambda v: getattr(v, "kind", str(v)))
def test_json_round_trip(f, dim):
    data = json.loads(json.dumps(f.to_dict()))
    g = observable_from_dict(data)
    assert g.to_dict() == f.to_dict()
    X = np.random.default_rng(1).random((50, dim))
    np.testing.assert_allclose(g.evaluate(X), f.evaluate(X))


def test_random_bumps_bounded():
    rng = np.random.default_rng(0)
    for _ in range(20):
        b = random_bumps(2, 2, 0.01, rng)
        assert b.sup_bound <= 0.01 + 1e-15
        vals = b.evaluate(rng.random((200, 2)))
        assert np.linalg.norm(vals, axis=1).max() <= 0.01 + 1e-12


def test_character_sum_is_serializable_with_matrix():
    f = build_character_observable(ANOSOV_ENDO)
    assert isinstance(f, CharacterSum)
    assert f.to_dict()["matrix"] == ANOSOV_ENDO


def test_write_time_series(tmp_path):
    path = tmp_path / "series.csv"
    write_time_series(CoordinateEmbedding(1), parse_example("circle-doubling"), TorusPoint.from_fractions([F(1, 8)]), 3, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,component_0,component_1"
    assert len(lines) == 5
    assert [float(v) for v in lines[-1].split(",")[1:]] == pytest.approx([1.0, 0.0])


def test_evaluate_rejects_points_outside_domain():
    from expobs.observable import evaluate

    with pytest.raises(ValueError, match="outside the domain"):
        evaluate(CoordinateEmbedding(2), TorusPoint.from_floats([0.1]))
    with pytest.raises(ValueError, match="outside the domain"):
        evaluate(PwlCircle(), TorusPoint.from_floats([0.1, 0.2]))
    with pytest.raises(ValueError, match="outside the domain"):
        build_character_observable(DOUBLE)(np.array([0.1, 0.2, 0.3]))
    assert evaluate(Constant((1.0,)), TorusPoint.from_floats([0.1, 0.2, 0.3])) == pytest.approx([1.0])


def test_delay_of_length_zero_is_base():
    f = CoordinateEmbedding(2)
    X = np.random.default_rng(2).random((20, 2))
    np.testing.assert_array_equal(delay(f, SystemDescriptor.toral(DOUBLE), 0).evaluate(X), f.evaluate(X))
