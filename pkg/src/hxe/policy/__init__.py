"""Goal-conditioned diffusion policy with a temporal-distance head."""

from hxe.policy.model import PolicyConfig, PolicyModel, embed, predict_distance, sample_actions, timestep_embedding
from hxe.policy.schedule import NoiseSchedule
from hxe.policy.train import (
    DISTANCE_WEIGHT,
    TrainConfig,
    combine_losses,
    diffusion_loss,
    distance_loss,
    loss_components,
    total_loss,
    train_policy,
)

__all__ = [
    "PolicyConfig", "PolicyModel", "embed", "predict_distance", "sample_actions", "timestep_embedding",
    "NoiseSchedule", "DISTANCE_WEIGHT", "TrainConfig", "combine_losses", "diffusion_loss",
    "distance_loss", "loss_components", "total_loss", "train_policy",
]
