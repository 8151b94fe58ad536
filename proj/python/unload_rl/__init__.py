"""Deterministic parcel-unloading environment and DQN trainer bindings."""

from ._core import (
    CollapseMode,
    CriticEnsemble,
    EnvConfig,
    EvalRecord,
    NetConfig,
    StackEnv,
    StepKind,
    StepOutcome,
    TrainConfig,
    TrainResult,
    TrainStats,
    Variant,
    derive_seed,
    evaluate,
    parse_variant,
    train,
    train_config_from_file,
    variant_name,
)

__all__ = [
    "CollapseMode",
    "CriticEnsemble",
    "EnvConfig",
    "EvalRecord",
    "NetConfig",
    "StackEnv",
    "StepKind",
    "StepOutcome",
    "TrainConfig",
    "TrainResult",
    "TrainStats",
    "Variant",
    "derive_seed",
    "evaluate",
    "parse_variant",
    "train",
    "train_config_from_file",
    "variant_name",
]
