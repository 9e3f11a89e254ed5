"""Gradient-based DAG learning over metric samples."""
from .model import (
    MLPParams,
    ModelParams,
    decode,
    elbo,
    encode,
    kl_standard_normal,
    reconstruction_term,
    sample_elbo,
)
from .train import (
    LagrangianState,
    OuterRecord,
    StructureLearnConfig,
    TrainResult,
    acyclicity,
    acyclicity_value,
    augmented_lagrangian_loss,
    train,
)
from ..graph import WeightedDag, threshold_graph
