from .common import HyperParams, ReplayBuffer, advantage, compute_returns, epsilon

__all__ = ["HyperParams", "ReplayBuffer", "advantage", "compute_returns", "epsilon"]
