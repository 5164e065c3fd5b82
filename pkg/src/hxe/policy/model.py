"""Goal-conditioned policy network: encoders, attention mixer, diffusion and distance heads."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from hxe.core import OBS_SHAPE, UNIFIED_DIM, ConfigError, ShapeError
from hxe.nnet import tensor as T
from hxe.nnet.checkpoint import load_params, save_params
from hxe.nnet.layers import MLP, Conv2d, LayerNorm, Linear, Module, Parameter, TransformerBlock
from hxe.nnet.tensor import Tensor, no_grad
from hxe.policy.schedule import NoiseSchedule

TIME_EMBED_DIM = 16


@dataclass(frozen=True)
class PolicyConfig:
    context: int = 3
    horizon: int = 5
    diffusion_steps: int = 10
    width: int = 64
    layers: int = 2
    heads: int = 4
    mlp_hidden: int = 128
    head_hidden: int = 256
    conv_channels: tuple[int, int] = (16, 32)
    obs_shape: tuple[int, int, int] = OBS_SHAPE
    goal_conditioned: bool = True

    @property
    def action_size(self) -> int:
        return self.horizon * UNIFIED_DIM

    def to_json(self) -> dict:
        d = asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        d["obs_shape"] = list(self.obs_shape)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "PolicyConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("conv_channels", "obs_shape"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def timestep_embedding(k: np.ndarray, dim: int = TIME_EMBED_DIM) -> np.ndarray:
    """Sinusoidal embedding of integer diffusion steps, shape (len(k), dim)."""
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / half)
    ang = np.asarray(k, dtype=np.float64)[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


class ConvEncoder(Module):
    """Two stride-2 3x3 convolutions then a linear projection to one token."""

    def __init__(self, c_in: int, cfg: PolicyConfig, rng: np.random.Generator, dtype):
        c1, c2 = cfg.conv_channels
        H, W, _ = cfg.obs_shape
        self.conv1 = Conv2d(c_in, c1, 3, rng, stride=2, pad=1, dtype=dtype)
        self.conv2 = Conv2d(c1, c2, 3, rng, stride=2, pad=1, dtype=dtype)
        h2, w2 = (H + 1) // 2, (W + 1) // 2
        h2, w2 = (h2 + 1) // 2, (w2 + 1) // 2
        self.proj = Linear(c2 * h2 * w2, cfg.width, rng, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        h = T.gelu(self.conv1(x))
        h = T.gelu(self.conv2(h))
        return self.proj(T.reshape(h, (h.shape[0], -1)))


class PolicyModel(Module):
    def __init__(self, cfg: PolicyConfig | None = None, seed: int = 0, dtype=np.float32):
        cfg = cfg or PolicyConfig()
        rng = np.random.default_rng(seed)
        C = cfg.obs_shape[2]
        self.obs_encoder = ConvEncoder(C, cfg, rng, dtype)
        self.goalfused_encoder = ConvEncoder(2 * C, cfg, rng, dtype)
        self.pos = Parameter((0.02 * rng.standard_normal((cfg.context + 1, cfg.width))).astype(dtype))
        self.blocks = [TransformerBlock(cfg.width, cfg.heads, cfg.mlp_hidden, rng, dtype) for _ in range(cfg.layers)]
        self.ln_f = LayerNorm(cfg.width, dtype)
        self.eps_head = MLP([cfg.width + cfg.action_size + TIME_EMBED_DIM, cfg.head_hidden, cfg.head_hidden, cfg.action_size], rng, dtype)
        self.dist_head = MLP([cfg.width, cfg.width, 1], rng, dtype)
        # config and schedule are plain attributes, invisible to named_parameters
        self.cfg = cfg
        self.schedule = NoiseSchedule(cfg.diffusion_steps)

    @property
    def dtype(self):
        return self.pos.data.dtype

    def _check_inputs(self, context: np.ndarray, goal: np.ndarray) -> None:
        c, obs = self.cfg.context, tuple(self.cfg.obs_shape)
        if context.ndim != 5 or context.shape[1:] != (c, *obs):
            raise ShapeError(f"context must be (B, {c}, {obs}), got {context.shape}")
        if goal.shape != (context.shape[0], *obs):
            raise ShapeError(f"goal must be ({context.shape[0]}, {obs}), got {goal.shape}")

    def encode(self, context: np.ndarray, goal: np.ndarray) -> Tensor:
        """Pooled features (B, width). ``context`` is (B, c, H, W, C) with the current frame last."""
        context = np.asarray(context, dtype=self.dtype)
        goal = np.asarray(goal, dtype=self.dtype)
        self._check_inputs(context, goal)
        B, c, H, W, C = context.shape
        if not self.cfg.goal_conditioned:
            goal = np.zeros_like(goal)
        frames = context.reshape(B * c, H, W, C).transpose(0, 3, 1, 2)
        obs_tok = T.reshape(self.obs_encoder(Tensor(np.ascontiguousarray(frames))), (B, c, -1))
        fused = np.concatenate([context[:, -1], goal], axis=-1).transpose(0, 3, 1, 2)
        goal_tok = T.reshape(self.goalfused_encoder(Tensor(np.ascontiguousarray(fused))), (B, 1, -1))
        x = T.concat([obs_tok, goal_tok], axis=1) + self.pos
        for blk in self.blocks:
            x = blk(x)
        return T.mean_pool(self.ln_f(x), axis=1)

    def predict_eps(self, f: Tensor, x_noisy, k) -> Tensor:
        """Noise prediction, (B, n*7)."""
        B = f.shape[0]
        k = np.broadcast_to(np.asarray(k), (B,))
        temb = timestep_embedding(k).astype(self.dtype)
        x_noisy = T.as_tensor(np.asarray(x_noisy, dtype=self.dtype)) if not isinstance(x_noisy, Tensor) else x_noisy
        return self.eps_head(T.concat([f, x_noisy, Tensor(temb)], axis=1))

    def predict_distance_features(self, f: Tensor) -> Tensor:
        """Distance head output, (B, 1)."""
        return self.dist_head(f)

    # -- persistence --------------------------------------------------------

    def save(self, directory, extra: dict | None = None) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        save_params(d / "model.hxw", self.state_dict())
        meta = {"version": 1, "config": self.cfg.to_json(), "schedule": self.schedule.to_json()}
        meta.update(extra or {})
        (d / "model.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory, dtype=np.float32) -> tuple["PolicyModel", dict]:
        d = Path(directory)
        meta = json.loads((d / "model.json").read_text(encoding="utf-8"))
        model = cls(PolicyConfig.from_json(meta["config"]), dtype=dtype)
        model.load_state_dict(load_params(d / "model.hxw"))
        return model, meta


def _batched(context: np.ndarray, goal: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    context, goal = np.asarray(context), np.asarray(goal)
    if context.ndim == 4:
        return context[None], goal[None], True
    return context, goal, False


def sample_actions(model: PolicyModel, context, goal, rng: np.random.Generator) -> np.ndarray:
    """DDPM ancestral sampling from unit Gaussian noise; returns (B, n, 7) in [-1, 1].

    Unbatched inputs ((c, H, W, C) and (H, W, C)) give a single (n, 7) block.
    """
    context, goal, single = _batched(context, goal)
    B = context.shape[0]
    sched = model.schedule
    with no_grad():
        f = model.encode(context, goal)
        x = rng.standard_normal((B, model.cfg.action_size))
        for k in range(sched.K - 1, -1, -1):
            eps = model.predict_eps(f, x, k).data.astype(np.float64)
            noise = rng.standard_normal(x.shape) if k > 0 else None
            x = sched.step(x, eps, k, noise)
    out = np.clip(x, -1.0, 1.0).reshape(B, model.cfg.horizon, UNIFIED_DIM)
    return out[0] if single else out


def predict_distance(model: PolicyModel, context, goal) -> np.ndarray | float:
    context, goal, single = _batched(context, goal)
    with no_grad():
        d = model.predict_distance_features(model.encode(context, goal)).data[:, 0].astype(np.float64)
    return float(d[0]) if single else d


def embed(model: PolicyModel, context, goal) -> np.ndarray:
    """Pooled encoder features as a float64 array (B, width)."""
    context, goal, _ = _batched(context, goal)
    with no_grad():
        return model.encode(context, goal).data.astype(np.float64)
