import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hxe.core import ChecksumError, ConfigError, FormatError, Pose2D, TruncatedError, VersionError
from hxe.datapipe.alignment import AlignmentMap, align_to_unified, alignment_for, canonical_map
from hxe.datapipe.generate import generate_dataset
from hxe.datapipe.io import decode_episode, encode_episode, read_dataset, write_dataset
from hxe.datapipe.labels import (
    context_indices,
    egocentric_waypoints,
    make_sample,
    sample_goal,
    unified_labels,
)
from hxe.datapipe.manifest import DatasetManifest
from hxe.datapipe.mixture import MixtureSampler
from hxe.datapipe.normalize import RangeWarning, denormalize_action, fit_normalization, normalize_action
from hxe.simworld.embodiments import get_profile

# upper 0.1% point of the chi-square distribution with 20 degrees of freedom
CHI2_20DOF_999 = 45.315


def test_fit_normalization_bounds():
    s = fit_normalization(np.array([[-2.0], [0.0], [2.0]]))
    assert s.lo[0] == -2 and s.hi[0] == 2 and not s.degenerate[0]


def test_fit_normalization_constant_dim():
    s = fit_normalization(np.array([[5.0], [5.0]]))
    assert s.lo[0] == s.hi[0] == 5 and s.degenerate[0]
    assert normalize_action([5.0], s.lo, s.hi)[0] == 0.0


def test_fit_normalization_order_invariant():
    rows = np.random.default_rng(0).normal(size=(500, 4))
    a = fit_normalization(rows)
    b = fit_normalization(np.random.default_rng(1).permutation(rows))
    np.testing.assert_array_equal(a.lo, b.lo)
    np.testing.assert_array_equal(a.hi, b.hi)


def test_normalize_examples():
    assert normalize_action([0.0], [-2.0], [2.0])[0] == 0.0
    assert normalize_action([2.0], [-2.0], [2.0])[0] == 1.0


def test_normalize_out_of_range_warns_and_clamps():
    with pytest.warns(RangeWarning):
        out = normalize_action([3.0], [-2.0], [2.0])
    assert out[0] == 1.0


def test_round_trip_normalization():
    rng = np.random.default_rng(2)
    lo = rng.uniform(-3, 0, size=5)
    hi = lo + rng.uniform(0.1, 4, size=5)
    for _ in range(1000):
        a = rng.uniform(lo, hi)
        back = denormalize_action(normalize_action(a, lo, hi), lo, hi)
        assert np.max(np.abs(back - a)) < 1e-9


def test_nav_embedding():
    u = align_to_unified([0.5, 0.2], canonical_map("nav_fwd_left"))
    np.testing.assert_array_equal(u.v, [0, 0.2, -0.5, 0, 0, 0, 0])


def test_identity_map_on_manip_action():
    amap = AlignmentMap(tuple(range(7)), (1,) * 7, 7)
    a = np.linspace(-1, 1, 7)
    np.testing.assert_array_equal(align_to_unified(a, amap).v, a)


@pytest.mark.parametrize("emb", ["arm_a", "arm_b", "nav_a", "drone_a"])
def test_alignment_inverse(emb):
    amap = alignment_for(get_profile(emb))
    a = np.random.default_rng(3).uniform(-1, 1, size=amap.source_dim)
    np.testing.assert_array_equal(amap.inverse().apply(amap.apply(a)), a)
    np.testing.assert_array_equal(amap.apply(np.zeros(amap.source_dim)), np.zeros(7))


def test_alignment_rejects_non_injective():
    with pytest.raises(ConfigError):
        AlignmentMap((0, 0), (1, 1), 2)


def test_egocentric_waypoint_examples():
    w = egocentric_waypoints([Pose2D(0, 0, 0), Pose2D(1, 0, 0)], 0, 1)
    np.testing.assert_allclose(w[0], [1, 0], atol=1e-12)
    w = egocentric_waypoints([Pose2D(0, 0, math.pi / 2), Pose2D(-1, 0, 0)], 0, 1)
    np.testing.assert_allclose(w[0], [0, 1], atol=1e-12)


@given(st.floats(-math.pi, math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_egocentric_waypoint_isometry(yaw, dx, dy):
    w = egocentric_waypoints([Pose2D(1, 2, yaw), Pose2D(1 + dx, 2 + dy, 0)], 0, 1)[0]
    assert math.hypot(*w) == pytest.approx(math.hypot(dx, dy), abs=1e-9)


def test_sample_goal_range_and_clamp():
    rng = np.random.default_rng(0)
    draws = {sample_goal(100, 10, rng) for _ in range(2000)}
    assert draws == set(range(30, 51))
    assert {sample_goal(15, 10, rng) for _ in range(50)} == {14}


def test_sample_goal_uniform_offsets():
    rng = np.random.default_rng(7)
    n = 100_000
    offs = np.array([sample_goal(200, 0, rng) for _ in range(n)])
    counts = np.bincount(offs - 20, minlength=21)
    assert len(counts) == 21
    assert np.all(np.abs(counts / n - 1 / 21) < 0.02)
    chi2 = float(np.sum((counts - n / 21) ** 2 / (n / 21)))
    assert chi2 < CHI2_20DOF_999


@given(st.integers(2, 300), st.data())
def test_distance_labels_positive(T, data):
    t = data.draw(st.integers(0, T - 2))
    g = sample_goal(T, t, np.random.default_rng(T + t))
    assert t < g <= T - 1 and g - t >= 1


def test_context_padding(arm_dataset):
    m, eps = arm_dataset
    s = make_sample(eps[0], 0, eps[0].length - 1, {m.dataset_id: m})
    for frame in s.context:
        np.testing.assert_array_equal(frame, eps[0].observations[0].raster)
    assert context_indices(1, 3) == [0, 0, 1]


def test_tail_rows_are_hold_actions(arm_dataset):
    m, eps = arm_dataset
    ep = eps[0]
    T = ep.length
    labels = unified_labels(ep, T - 2, m, 5)
    zero = labels[1:]
    # translation and rotation of the padded rows encode zero physical motion
    from hxe.control.decode import ActionDecoder

    phys = ActionDecoder(m).to_physical(zero)
    np.testing.assert_allclose(phys[:, :6], 0.0, atol=1e-9)
    assert np.all(labels[:, 6] == labels[0, 6])


def test_nav_sample_matches_pipeline(nav_dataset):
    m, eps = nav_dataset
    ep = eps[1]
    s = make_sample(ep, 4, 30, {m.dataset_id: m})
    w = egocentric_waypoints(ep.poses, 4, 5)[0]
    expect = align_to_unified(normalize_action(w, m.norm.lo, m.norm.hi), m.alignment)
    np.testing.assert_allclose(s.actions[0], expect.v, atol=1e-12)
    assert s.distance == 26.0 and s.domain == "navigation"


def test_emitted_actions_in_range_and_domain_slots(arm_dataset, nav_dataset):
    sampler = MixtureSampler([arm_dataset, nav_dataset], seed=0)
    b = sampler.batch(400)
    assert np.all(np.abs(b.actions) <= 1.0)
    nav = b.domain == "navigation"
    assert nav.any() and (~nav).any()
    np.testing.assert_array_equal(b.actions[nav][:, :, [0, 3, 4, 5, 6]], 0.0)
    assert set(np.unique(b.actions[~nav][:, :, 6])) <= {-1.0, 1.0}
    assert np.all(b.distance >= 1)


def test_sampler_deterministic(arm_dataset, nav_dataset):
    a = MixtureSampler([arm_dataset, nav_dataset], seed=4).batch(32)
    b = MixtureSampler([arm_dataset, nav_dataset], seed=4).batch(32)
    np.testing.assert_array_equal(a.actions, b.actions)
    np.testing.assert_array_equal(a.context, b.context)


def test_sample_and_batch_agree(arm_dataset, nav_dataset):
    s1 = MixtureSampler([arm_dataset, nav_dataset], seed=8)
    s2 = MixtureSampler([arm_dataset, nav_dataset], seed=8)
    singles = [s1.sample() for _ in range(10)]
    b = s2.batch(10)
    np.testing.assert_allclose(np.stack([s.actions for s in singles]), b.actions, atol=1e-6)
    np.testing.assert_array_equal([s.distance for s in singles], b.distance)


def _renamed(ds, name, weight):
    m, eps = ds
    from dataclasses import replace

    return replace(m, dataset_id=name, weight=weight), eps


def test_two_equal_weight_datasets(arm_dataset):
    a, b = _renamed(arm_dataset, "a", 1.0), _renamed(arm_dataset, "b", 1.0)
    s = MixtureSampler([a, b], seed=1, domain_shares={"manipulation": 1.0})
    n = 100_000
    hits = sum(s.draw_index()[0] == "a" for _ in range(n))
    assert abs(hits / n - 0.5) <= 0.01


def test_single_dataset_always_chosen(arm_dataset):
    s = MixtureSampler([arm_dataset], seed=1, domain_shares={"manipulation": 1.0})
    assert {s.draw_index()[0] for _ in range(200)} == {arm_dataset[0].dataset_id}


def test_sampler_config_errors(arm_dataset):
    with pytest.raises(ConfigError):
        MixtureSampler([arm_dataset], domain_shares={"navigation": 0.5, "manipulation": 0.5})
    with pytest.raises(ConfigError):
        MixtureSampler([arm_dataset], domain_shares={"underwater": 1.0})


def test_episode_round_trip(nav_dataset):
    ep = nav_dataset[1][0]
    back = decode_episode(encode_episode(ep), ep.dataset_id, ep.embodiment_id)
    assert encode_episode(back) == encode_episode(ep)
    assert back.poses == ep.poses
    np.testing.assert_array_equal(back.raw_actions, ep.raw_actions)


def test_two_step_episode_round_trip(arm_dataset):
    from hxe.core import Episode

    ep0 = arm_dataset[1][0]
    ep = Episode("d", "arm_a", ep0.observations[:2], ep0.raw_actions[:1], ep0.poses[:2])
    back = decode_episode(encode_episode(ep), "d", "arm_a")
    assert back.length == 2 and back.poses == ep.poses
    np.testing.assert_array_equal(back.obs_array(), ep.obs_array())


def test_corruption_errors(arm_dataset):
    buf = encode_episode(arm_dataset[1][0])
    with pytest.raises(FormatError):
        decode_episode(b"XXXX" + buf[4:])
    flipped = bytearray(buf)
    flipped[100] ^= 0xFF
    with pytest.raises(ChecksumError):
        decode_episode(bytes(flipped))
    with pytest.raises(TruncatedError):
        decode_episode(buf[:-10])
    bumped = bytearray(buf)
    bumped[4] = 9
    with pytest.raises(VersionError):
        decode_episode(bytes(bumped))


def test_dataset_directory_round_trip(tmp_path, arm_dataset):
    m, eps = arm_dataset
    write_dataset(tmp_path / "a", m, eps)
    m2, eps2 = read_dataset(tmp_path / "a")
    assert m2.to_json() == m.to_json()
    write_dataset(tmp_path / "b", m2, eps2)
    for f in sorted((tmp_path / "a").rglob("*")):
        if f.is_file():
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()


def test_manifest_weight_defaults_to_count(arm_dataset):
    assert arm_dataset[0].weight == len(arm_dataset[1])


def test_manifest_version_checked(arm_dataset):
    d = arm_dataset[0].to_json()
    d["version"] = 99
    with pytest.raises(ConfigError):
        DatasetManifest.from_json(d)


def test_generate_zero_episodes_is_config_error():
    with pytest.raises(ConfigError):
        generate_dataset("two_object_reach", "arm_a", 0, 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=2), st.integers(1, 20))
def test_alignment_linear(a, k):
    amap = canonical_map("nav_fwd_left")
    a = np.array(a)
    np.testing.assert_allclose(amap.apply(k * a), k * amap.apply(a))
