from .fallback import UnknownRelation, rule_fallback, rule_placements
from .network import (
    ContextualGraph,
    LossBreakdown,
    MissingGroundTruth,
    NetConfig,
    NonFiniteLoss,
    PredictedPlacement,
    build_graph,
    decode,
    encode,
    gradient_check,
    infer,
    init_params,
    loss_from_graph,
    message_pass,
)
from .training import (
    AdamState,
    beta_for_epoch,
    load_checkpoint,
    save_checkpoint,
    train,
    train_step,
)

__all__ = [
    "AdamState",
    "ContextualGraph",
    "LossBreakdown",
    "MissingGroundTruth",
    "NetConfig",
    "NonFiniteLoss",
    "PredictedPlacement",
    "UnknownRelation",
    "beta_for_epoch",
    "build_graph",
    "decode",
    "encode",
    "gradient_check",
    "infer",
    "init_params",
    "load_checkpoint",
    "loss_from_graph",
    "message_pass",
    "rule_fallback",
    "rule_placements",
    "save_checkpoint",
    "train",
    "train_step",
]
