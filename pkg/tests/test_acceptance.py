"""End-to-end acceptance checks A1 to A10.

Each test decides one criterion and records a one-line measurement; the terminal
summary prints ``A<n> PASS|FAIL <measurement>`` for every criterion that ran.
"""

import itertools
import json
import math
import time
import warnings

import numpy as np
import pytest

from conftest import fd_relative_error
from hxe.cli import main as cli_main
from hxe.control import ArbiterState, TopoMap, arbiter_step, build_topomap
from hxe.core import ChecksumError, FormatError
from hxe.datapipe.alignment import align_to_unified, alignment_for, canonical_map
from hxe.datapipe.generate import generate_dataset
from hxe.datapipe.io import decode_episode, encode_episode, read_dataset, write_dataset
from hxe.datapipe.labels import sample_goal
from hxe.datapipe.mixture import Batch, MixtureSampler
from hxe.datapipe.normalize import RangeWarning, denormalize_action, normalize_action
from hxe.evalkit.ablation import MixtureSpec, ablation_run
from hxe.evalkit.agents import NavOracleAgent
from hxe.evalkit.analysis import ols_r2
from hxe.evalkit.metrics import EvalReport, score_trial, summarize
from hxe.evalkit.rollout import TrialResult, prepare_nav_trial, rollout_nav
from hxe.nnet import tensor as T
from hxe.nnet.checkpoint import decode_params, encode_params, load_params, save_params
from hxe.nnet.layers import MLP, Conv2d, LayerNorm, Linear, MultiHeadAttention, TransformerBlock
from hxe.policy.model import PolicyConfig, PolicyModel, sample_actions
from hxe.policy.train import TrainConfig, diffusion_loss, distance_loss, train_policy
from hxe.simworld.embodiments import PROFILES, get_profile
from hxe.simworld.tasks import TaskSpec

F64 = np.float64
CHI2_20DOF_999 = 45.315


# ---------------------------------------------------------------- A1


A1_SEEDS = [0, 1, 2, 3, 4]
A1_TRIALS = 50
A1_NOVEL = "novel_cluttered_reach"
A1_IN_DIST = ("two_object_reach", "cluttered_reach")


@pytest.fixture(scope="module")
def a1_table():
    start = time.perf_counter()
    datasets = {}
    # 200 episodes per domain, split over two worlds each
    for kind, emb, seed in [("two_object_reach", "arm_a", 11), ("cluttered_reach", "arm_a", 12),
                            ("nav_room", "nav_a", 13), ("corridor_nav", "nav_a", 14)]:
        m, eps = generate_dataset(kind, emb, 100, seed)
        datasets[m.dataset_id] = (m, eps)
    manip = ("two_object_reach-arm_a", "cluttered_reach-arm_a")
    mixes = [MixtureSpec("manip_only", manip), MixtureSpec("co_trained", manip + ("nav_room-nav_a", "corridor_nav-nav_a"))]
    tasks = [TaskSpec(name, seed=1000) for name in (A1_NOVEL, *A1_IN_DIST)]
    table = ablation_run(mixes, datasets, TrainConfig(steps=3000, batch_size=64, lr_max=1e-3), tasks, A1_SEEDS,
                         trials=A1_TRIALS, workers=None)
    return table, time.perf_counter() - start


@pytest.mark.acceptance("A1")
def test_a1_co_training_transfer(a1_table, record_detail):
    table, elapsed = a1_table
    assert not table.partial, table.error
    co, solo = table.by_seed("co_trained", A1_NOVEL), table.by_seed("manip_only", A1_NOVEL)
    wins = sum(co[s] >= solo[s] for s in A1_SEEDS)
    gaps = {t: table.mean("co_trained", t) - table.mean("manip_only", t) for t in A1_IN_DIST}
    per_seed = " ".join(f"{co[s]:.2f}/{solo[s]:.2f}" for s in A1_SEEDS)
    record_detail(f"co>=manip on {A1_NOVEL} in {wins}/5 seeds (co/manip {per_seed}); in-dist gaps "
                  + ", ".join(f"{t} {g:+.3f}" for t, g in gaps.items()) + f"; {elapsed / 60:.1f} min")
    assert wins >= 3
    assert all(g >= -0.05 for g in gaps.values())


# ---------------------------------------------------------------- A2

LAYER_TOL, MLP_TOL = 1e-5, 1e-6
FD_SEEDS = range(10)


def _leaf(a):
    return T.Tensor(np.asarray(a, dtype=F64), requires_grad=True)


def _module_error(module, x, rng):
    r = rng.standard_normal(module(x).shape)
    return fd_relative_error(lambda: T.sum_(module(x) * r), list(module.parameters()) + [x])


@pytest.mark.acceptance("A2")
def test_a2_gradient_correctness(record_detail):
    tiny = PolicyConfig(width=8, layers=1, heads=2, mlp_hidden=8, head_hidden=16, conv_channels=(2, 2),
                        obs_shape=(4, 4, 2))
    worst = {"mlp": 0.0, "layer": 0.0, "loss": 0.0}
    start = time.perf_counter()
    for seed in FD_SEEDS:
        rng = np.random.default_rng(seed)
        x2 = _leaf(rng.normal(size=(3, 4)))
        worst["mlp"] = max(worst["mlp"], _module_error(Linear(4, 3, rng, F64), x2, rng),
                           _module_error(MLP([4, 6, 2], rng, F64), x2, rng))
        x3 = _leaf(rng.normal(size=(2, 3, 4)))
        ln = LayerNorm(4, F64)
        ln.gamma.data[:] = rng.normal(size=4)
        ln.beta.data[:] = rng.normal(size=4)
        worst["layer"] = max(
            worst["layer"],
            _module_error(Conv2d(2, 3, 3, rng, 2, 1, F64), _leaf(rng.normal(size=(2, 2, 5, 5))), rng),
            _module_error(ln, x3, rng),
            _module_error(MultiHeadAttention(4, 2, rng, F64), x3, rng),
            _module_error(TransformerBlock(4, 2, 6, rng, F64), x3, rng),
        )
        model = PolicyModel(tiny, seed=seed, dtype=F64)
        b = Batch(rng.random((2, 3, 4, 4, 2)), rng.random((2, 4, 4, 2)), rng.uniform(-1, 1, (2, 5, 7)),
                  np.array([22.0, 37.0]), np.array(["manipulation", "navigation"]))
        params = model.parameters()
        worst["loss"] = max(
            worst["loss"],
            fd_relative_error(lambda: diffusion_loss(model, b, np.random.default_rng(seed)), params, max_coords=8, rng=rng),
            fd_relative_error(lambda: distance_loss(model, b), params, max_coords=8, rng=rng),
        )
    elapsed = time.perf_counter() - start
    record_detail(f"max rel err: MLP {worst['mlp']:.1e}, layers {worst['layer']:.1e}, losses {worst['loss']:.1e} "
                  f"over {len(FD_SEEDS)} seeds; {elapsed:.0f} s")
    assert worst["mlp"] < MLP_TOL and worst["loss"] < MLP_TOL and worst["layer"] < LAYER_TOL
    assert elapsed <= 120


# ---------------------------------------------------------------- A3


@pytest.mark.acceptance("A3")
def test_a3_bimodal_expressiveness(record_detail):
    cfg = PolicyConfig(width=16, layers=1, heads=2, mlp_hidden=32, head_hidden=512, conv_channels=(4, 8))
    H = cfg.obs_shape

    class Bimodal:
        def __init__(self, seed):
            self.rng = np.random.default_rng(seed)

        def batch(self, size):
            a = np.zeros((size, cfg.horizon, 7))
            a[:, :, 1] = self.rng.choice([-0.5, 0.5], size=size)[:, None]
            return Batch(np.zeros((size, cfg.context, *H)), np.zeros((size, *H)), a, np.full(size, 25.0),
                         np.array(["manipulation"] * size))

    start = time.perf_counter()
    model = PolicyModel(cfg, seed=0)
    train_policy(model, Bimodal(0), TrainConfig(steps=10_000, batch_size=64, lr_max=2e-3))
    out = sample_actions(model, np.zeros((200, cfg.context, *H)), np.zeros((200, *H)), np.random.default_rng(1))
    elapsed = time.perf_counter() - start
    hits = []
    for sign in (0.5, -0.5):
        mode = np.zeros((cfg.horizon, 7))
        mode[:, 1] = sign
        hits.append(np.abs(out - mode).max(axis=(1, 2)) <= 0.1)
    near = (hits[0] | hits[1]).mean()
    record_detail(f"{near:.1%} of 200 samples within 0.1 of a mode; +0.5 {hits[0].mean():.1%}, "
                  f"-0.5 {hits[1].mean():.1%}; {elapsed:.0f} s")
    assert near >= 0.95
    assert hits[0].mean() >= 0.25 and hits[1].mean() >= 0.25
    assert elapsed <= 300


# ---------------------------------------------------------------- A4


@pytest.mark.acceptance("A4")
def test_a4_normalization_and_alignment(record_detail):
    rng = np.random.default_rng(0)
    sets = [generate_dataset(kind, emb, 6, seed) for kind, emb, seed in
            [("two_object_reach", "arm_a", 1), ("cluttered_reach", "arm_b", 2), ("corridor_nav", "nav_a", 3),
             ("nav_room", "nav_b", 4), ("nav_room", "drone_a", 5)]]
    batch = MixtureSampler(sets, seed=0).batch(2000)
    max_abs = float(np.abs(batch.actions).max())

    worst_rt = 0.0
    for _ in range(1000):
        lo = rng.uniform(-3, 0, size=7)
        hi = lo + rng.uniform(0.01, 5, size=7)
        a = rng.uniform(lo, hi)
        worst_rt = max(worst_rt, float(np.abs(denormalize_action(normalize_action(a, lo, hi), lo, hi) - a).max()))

    inverse_ok = True
    for emb in PROFILES:
        amap = alignment_for(get_profile(emb))
        for _ in range(50):
            a = rng.uniform(-1, 1, size=amap.source_dim)
            inverse_ok &= bool(np.array_equal(amap.inverse().apply(amap.apply(a)), a))

    nav = canonical_map("nav_fwd_left")
    nav_exact = 0
    for _ in range(1000):
        a = rng.uniform(-1, 1, size=2)
        nav_exact += np.array_equal(align_to_unified(a, nav).v, [0, a[1], -a[0], 0, 0, 0, 0])
    record_detail(f"max |unified| {max_abs:.3f}; round trip err {worst_rt:.1e}; maps invertible {inverse_ok}; "
                  f"nav embedding exact {nav_exact}/1000")
    assert max_abs <= 1.0 and worst_rt < 1e-9 and inverse_ok and nav_exact == 1000


# ---------------------------------------------------------------- A5


@pytest.mark.acceptance("A5")
def test_a5_topological_control_with_oracle(record_detail):
    task = TaskSpec("corridor_nav", seed=0)
    profile = get_profile("nav_a")
    trials = [prepare_nav_trial(task, i, profile) for i in range(20)]
    budgets = [2 * tr.recorded_steps for tr in trials]
    agent = NavOracleAgent(step_length=profile.v_max * 0.25)
    results = rollout_nav(agent, task, list(range(20)), np.random.default_rng(0), max_steps=lambda n: 2 * n,
                          trials=trials)
    reached = sum(r.success and r.steps <= b for r, b in zip(results, budgets))
    collisions = sum(r.collisions for r in results)
    ratio = max(r.steps / (b / 2) for r, b in zip(results, budgets))
    record_detail(f"{reached}/20 corridors reached within 2x recorded length (worst {ratio:.2f}x); "
                  f"{collisions} collisions")
    assert reached == 20 and collisions == 0


# ---------------------------------------------------------------- A6


@pytest.mark.acceptance("A6")
def test_a6_r2_estimator(record_detail):
    rng = np.random.default_rng(0)

    def split(X, y):
        n = len(y) // 2
        return X[:n], y[:n], X[n:], y[n:]

    X = rng.normal(size=(1000, 4))
    exact, _ = ols_r2(*split(X, 2 * X[:, 0]))
    permuted, _ = ols_r2(*split(X, rng.permutation(2 * X[:, 0])))
    y = rng.normal(scale=2.0, size=20_000)
    snr, _ = ols_r2(*split((y + rng.normal(size=y.size))[:, None], y))
    record_detail(f"exact {exact:.4f}; permuted {permuted:.4f} (n=1000); SNR 4:1 {snr:.4f}")
    assert exact >= 0.999 and permuted <= 0.05 and abs(snr - 0.8) <= 0.05


# ---------------------------------------------------------------- A7


@pytest.mark.acceptance("A7")
def test_a7_sampler_statistics(record_detail):
    arm = generate_dataset("two_object_reach", "arm_a", 4, 1)
    nav = generate_dataset("corridor_nav", "nav_a", 4, 2)
    sampler = MixtureSampler([arm, nav], seed=0, domain_shares={"navigation": 0.5, "manipulation": 0.5})
    n = 100_000
    nav_hits = sum(sampler.draw_index()[0] == nav[0].dataset_id for _ in range(n))
    nav_freq = nav_hits / n

    rng = np.random.default_rng(1)
    offsets = np.array([sample_goal(500, 0, rng) for _ in range(n)])
    counts = np.bincount(offsets - 20, minlength=21)
    freqs = counts / n
    worst_bin = float(np.abs(freqs - 1 / 21).max())
    chi2 = float(np.sum((counts - n / 21) ** 2 / (n / 21)))
    record_detail(f"navigation share {nav_freq:.4f} at 1e5 draws; goal offsets span {offsets.min()}..{offsets.max()}, "
                  f"max bin deviation {worst_bin:.4f}, chi2 {chi2:.1f} (20 dof)")
    assert abs(nav_freq - 0.5) <= 0.01
    assert len(counts) == 21 and worst_bin <= 0.02 and chi2 < CHI2_20DOF_999


# ---------------------------------------------------------------- A8


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.acceptance("A8")
def test_a8_persistence(tmp_path, record_detail):
    m, eps = generate_dataset("corridor_nav", "nav_a", 3, 9)
    write_dataset(tmp_path / "d1", m, eps)
    write_dataset(tmp_path / "d2", *read_dataset(tmp_path / "d1"))
    dataset_ok = _tree(tmp_path / "d1") == _tree(tmp_path / "d2")

    model = PolicyModel(PolicyConfig(width=8, layers=1, heads=2, mlp_hidden=8, head_hidden=16), seed=0)
    save_params(tmp_path / "a.hxw", model.state_dict())
    save_params(tmp_path / "b.hxw", load_params(tmp_path / "a.hxw"))
    ckpt_ok = (tmp_path / "a.hxw").read_bytes() == (tmp_path / "b.hxw").read_bytes()

    build_topomap(eps[0], stride=2).save(tmp_path / "m1")
    TopoMap.load(tmp_path / "m1").save(tmp_path / "m2")
    map_ok = _tree(tmp_path / "m1") == _tree(tmp_path / "m2")

    rejected = []
    for name, buf, decode in [("episode", encode_episode(eps[0]), decode_episode),
                              ("checkpoint", encode_params(model.state_dict()), decode_params)]:
        bad_magic = b"ZZZZ" + buf[4:]
        flipped = bytearray(buf)
        flipped[len(buf) // 2] ^= 0x5A
        for blob, err in ((bad_magic, FormatError), (bytes(flipped), ChecksumError)):
            try:
                decode(blob)
            except err:
                rejected.append(True)
            except Exception:  # noqa: BLE001 - a different error variant is a failure
                rejected.append(False)
            else:
                rejected.append(False)
    record_detail(f"byte-exact: dataset {dataset_ok}, checkpoint {ckpt_ok}, topomap {map_ok}; "
                  f"corruptions rejected with the right error {sum(rejected)}/{len(rejected)}")
    assert dataset_ok and ckpt_ok and map_ok and all(rejected)


# ---------------------------------------------------------------- A9


@pytest.mark.acceptance("A9")
def test_a9_end_to_end_pipeline(tmp_path, record_detail):
    start = time.perf_counter()
    data = tmp_path / "two_object_reach"
    assert cli_main(["gen-data", "--world", "two_object_reach", "--embodiment", "arm_a", "--episodes", "200",
                     "--seed", "0", "--out", str(data)]) == 0
    run = tmp_path / "run.json"
    run.write_text(json.dumps({"version": 1, "seed": 0, "datasets": [{"path": str(data)}],
                               "training": {"steps": 1500, "batch_size": 64, "lr_max": 1e-3},
                               "output": str(tmp_path / "model")}))
    assert cli_main(["train", "--config", str(run)]) == 0
    assert cli_main(["eval", "--model", str(tmp_path / "model"), "--tasks", "two_object_reach", "--trials", "20",
                     "--seed", "0", "--out", str(tmp_path / "eval")]) == 0
    elapsed = time.perf_counter() - start
    success = json.loads((tmp_path / "eval" / "report.json").read_text())["rows"][0]["success"]
    record_detail(f"two_object_reach success {success:.2f} over 20 trials; {elapsed / 60:.1f} min")
    assert success >= 0.8
    assert elapsed <= 600


# ---------------------------------------------------------------- A10


def _arbiter_modes(small, tau=0.05, h=3):
    s, modes = ArbiterState(tau=tau, h=h), []
    for below in small:
        a = np.zeros(7)
        a[2] = tau / 2 if below else tau
        s, mode = arbiter_step(s, a)
        modes.append(mode)
    return modes


def _enumerated(small, h=3):
    run, out, latched = 0, [], False
    for below in small:
        run = run + 1 if below else 0
        latched |= run >= h
        out.append("arm" if latched else "base")
    return out


@pytest.mark.acceptance("A10")
def test_a10_arbiter_and_scoring(record_detail):
    sequences = [seq for n in range(1, 7) for seq in itertools.product([True, False], repeat=n)]
    agree = sum(_arbiter_modes(seq) == _enumerated(seq) for seq in sequences)

    task = TaskSpec("two_object_reach")
    wrong = TrialResult(0, success=False, any_object=True, collisions=0, steps=12, grasped=1)
    right = TrialResult(1, success=True, any_object=True, collisions=0, steps=9, grasped=0)
    miss = TrialResult(2, success=False, any_object=False, collisions=0, steps=40)
    cases = [
        score_trial(wrong, True) is False, score_trial(wrong, False) is True,
        score_trial(right, True) is True, score_trial(right, False) is True,
        score_trial(miss, True) is False, score_trial(miss, False) is False,
    ]
    gc = summarize([wrong, right, miss], task, 0, "0" * 64, "GC", goal_conditioned=True)
    uc = summarize([wrong, right, miss], task, 0, "0" * 64, "UC", goal_conditioned=False)
    cases += [math.isclose(gc.score, 1 / 3), math.isclose(uc.score, 2 / 3)]
    record_detail(f"arbiter matches enumeration on {agree}/{len(sequences)} sequences (length <= 6); "
                  f"scoring cases {sum(cases)}/{len(cases)}")
    assert agree == len(sequences) and all(cases)
