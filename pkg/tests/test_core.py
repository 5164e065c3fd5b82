import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hxe.core import (
    EgoObservation,
    EmbodimentProfile,
    Episode,
    InvalidAction,
    Pose2D,
    ConfigError,
    ShapeError,
    UnifiedAction,
    clamp_unified,
    wrap_yaw,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_clamp_zero_is_identity():
    assert clamp_unified(np.zeros(7)) == UnifiedAction(np.zeros(7))


def test_clamp_at_bound():
    out = clamp_unified([1.0000001, 0, 0, 0, 0, 0, -1])
    np.testing.assert_array_equal(out.v, [1, 0, 0, 0, 0, 0, -1])


def test_clamp_rejects_nan():
    with pytest.raises(InvalidAction):
        clamp_unified([0, 0, np.nan, 0, 0, 0, 0])


def test_unified_action_needs_seven_components():
    with pytest.raises(InvalidAction):
        UnifiedAction(np.zeros(6))


def test_unified_action_rejects_out_of_range():
    with pytest.raises(InvalidAction):
        UnifiedAction(np.full(7, 1.5))


@given(st.lists(finite, min_size=7, max_size=7))
def test_clamp_is_idempotent(a):
    once = clamp_unified(a)
    assert clamp_unified(once.v) == once
    assert np.all(np.abs(once.v) <= 1.0)


@pytest.mark.parametrize("phi, expected", [(0.0, 0.0), (3 * math.pi, math.pi), (-math.pi, math.pi)])
def test_wrap_yaw_examples(phi, expected):
    assert wrap_yaw(phi) == pytest.approx(expected, abs=1e-12)


@given(st.floats(-50, 50, allow_nan=False), st.integers(-20, 20))
def test_wrap_yaw_periodic(phi, k):
    a, b = wrap_yaw(phi + 2 * math.pi * k), wrap_yaw(phi)
    # both lie in (-pi, pi]; compare on the circle to absorb the seam at +-pi
    assert -math.pi < a <= math.pi
    assert abs(math.remainder(a - b, 2 * math.pi)) < 1e-9


def test_wrap_yaw_rejects_nonfinite():
    with pytest.raises(ValueError):
        wrap_yaw(float("inf"))


def _obs(T):
    return [EgoObservation(np.zeros((4, 4, 2))) for _ in range(T)]


def test_episode_length_invariants():
    ep = Episode("d", "nav_a", _obs(3), np.zeros((2, 2)), [Pose2D(0, 0)] * 3)
    assert ep.length == 3 and ep.action_dim == 2
    with pytest.raises(ValueError):
        Episode("d", "nav_a", _obs(3), np.zeros((3, 2)), [Pose2D(0, 0)] * 3)
    with pytest.raises(ValueError):
        Episode("d", "nav_a", _obs(1), np.zeros((0, 2)), [Pose2D(0, 0)])
    with pytest.raises(ValueError):
        Episode("d", "nav_a", _obs(3), np.zeros((2, 2)), [Pose2D(0, 0)] * 2)


def test_observation_must_be_three_dimensional():
    with pytest.raises(ShapeError):
        EgoObservation(np.zeros((4, 4)))


def test_observation_values_bounded():
    with pytest.raises(ValueError):
        EgoObservation(np.full((2, 2, 1), 2.0))


def test_profile_rejects_inconsistent_action_dim():
    with pytest.raises(ConfigError):
        EmbodimentProfile("x", "navigator", 7, "nav_fwd_left")
    with pytest.raises(ConfigError):
        EmbodimentProfile("x", "hovercraft", 2, "nav_fwd_left")
