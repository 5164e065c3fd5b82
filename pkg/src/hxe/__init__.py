"""Cross-embodiment goal-conditioned imitation learning at desk scale."""

__version__ = "0.1.0"
