"""Decentralized multi-agent actor-critic with social-learning state estimation."""

__version__ = "0.1.0"

from . import actor_critic, beliefs, config, envs, harness, topology  # noqa: F401
from ._kernels import BACKEND  # noqa: F401
