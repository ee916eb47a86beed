"""Cooperative policy evaluation in decentralized POMDPs."""
from .model import (
    DecPomdpModel,
    LikelihoodModel,
    MapPolicy,
    MixturePolicy,
    ModelError,
    TabularReward,
    TabularTransition,
    one_hot_belief,
    random_model,
    uniform_belief,
    validate_model,
)
from .network import CombinationMatrix, build_from_positions, build_path, build_uniform, mixing_rate
from .evaluation import IdentityFeatures, LearnerConfig, Marginalization

__version__ = "0.1.0"

__all__ = [
    "CombinationMatrix",
    "DecPomdpModel",
    "IdentityFeatures",
    "LearnerConfig",
    "LikelihoodModel",
    "MapPolicy",
    "Marginalization",
    "MixturePolicy",
    "ModelError",
    "TabularReward",
    "TabularTransition",
    "build_from_positions",
    "build_path",
    "build_uniform",
    "mixing_rate",
    "one_hot_belief",
    "random_model",
    "uniform_belief",
    "validate_model",
]
