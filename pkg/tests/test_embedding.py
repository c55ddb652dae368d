import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import ANOSOV_ENDO, CAT, DOUBLE
from expobs.embedding import (
    check_flat_pair,
    flat_arc_pair,
    observability_number_experiment,
    reconstruct,
    scalar_candidates,
    separating_steps_for_pairs,
    unbounded_steps_experiment,
)
from expobs.observable import CoordinateEmbedding, PwlProfile, first_coordinate_character
from expobs.torus import SystemDescriptor, TorusPoint
from oracles import exit_step


def test_unbounded_steps_match_exit_time_oracle():
    rows = unbounded_steps_experiment(0.3, 20)
    assert [k for k, _ in rows] == list(range(1, 21))
    for k, step in rows:
        assert step == exit_step(Fraction(3, 10), k)
    assert rows[-1][1] >= 15


def test_unbounded_steps_other_eps():
    rows = unbounded_steps_experiment(0.05, 12)
    assert [s for _, s in rows] == [exit_step(Fraction(1, 20), k) for k in range(1, 13)]


def test_flat_pair_validation():
    prof = PwlProfile(0.3)
    x, y = flat_arc_pair(prof, 5)
    check_flat_pair(prof, x, y)
    assert x.coords[0] * 2 * math.pi == pytest.approx(2.0**-5)
    with pytest.raises(ValueError, match="distinct"):
        check_flat_pair(prof, y, y)
    with pytest.raises(ValueError, match="outside"):
        check_flat_pair(prof, TorusPoint.from_floats([0.25]), y)


def test_separating_steps_for_pairs():
    pairs = [flat_arc_pair(PwlProfile(0.3), k) for k in (4, 8)]
    assert separating_steps_for_pairs(0.3, pairs, 30) == [exit_step(Fraction(3, 10), 4), exit_step(Fraction(3, 10), 8)]


def test_scalar_candidates_family():
    c = scalar_candidates(2, seed=7)
    assert len(c) == 11
    assert c[0].to_dict() == first_coordinate_character(2).to_dict()
    assert [f.to_dict() for f in c] == [f.to_dict() for f in scalar_candidates(2, seed=7)]


@pytest.mark.parametrize("A", [DOUBLE, ANOSOV_ENDO])
def test_experiment_non_invertible_gives_two(A):
    exp = observability_number_experiment(A, mesh=1 / 32, horizon=4, seed=1, pair_count=500)
    assert exp.verdicts[1].status == "fails"
    assert len(exp.verdicts[1].witnesses) == 11
    assert exp.verdicts[2].status == "passes"
    assert exp.verdicts[2].details["floor_violations"] == 0
    assert exp.observability_number == 2


def test_experiment_cat_map_gives_one():
    exp = observability_number_experiment(CAT, mesh=1 / 32, horizon=4, seed=1)
    assert exp.observability_number == 1
    assert exp.verdicts[1].margin > 0
    assert 2 not in exp.verdicts


def test_experiment_refuses_non_hyperbolic():
    with pytest.raises(ValueError, match="refused"):
        observability_number_experiment([[1, 0], [0, 1]])


def test_reconstruct_cloud():
    S = SystemDescriptor.toral(DOUBLE)
    cloud = reconstruct(CoordinateEmbedding(2), S, 2, 300, seed=0)
    assert cloud.points.shape == (300, 12) and cloud.labels.shape == (300, 2)
    assert cloud.header()[0] == "delay_0" and cloud.header()[-1] == "source_1"
    assert cloud.min_pairwise_distance() > 0
    again = reconstruct(CoordinateEmbedding(2), S, 2, 300, seed=0)
    np.testing.assert_array_equal(cloud.points, again.points)
    with pytest.raises(ValueError):
        reconstruct(CoordinateEmbedding(2), S, -1, 10)
