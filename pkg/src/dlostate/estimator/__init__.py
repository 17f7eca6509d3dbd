"""Single-frame DLO state estimation: encoder, regression and voting branches."""

from .backbone import PointBackbone, ball_group_indices, farthest_point_indices, index_points, pairwise_sqdist
from .config import EstimatorConfig
from .heads import RegressionHead, TwoBranchEstimator, VotingHead
from .losses import estimation_loss
from .ops import encode_points, predict_voting, regress_nodes
from .voting import (
    EstimatorOutput,
    PointFeatures,
    VotingField,
    aggregate_to_sequence,
    aggregate_votes,
    voting_targets,
)

__all__ = [
    "PointBackbone",
    "ball_group_indices",
    "farthest_point_indices",
    "index_points",
    "pairwise_sqdist",
    "EstimatorConfig",
    "RegressionHead",
    "TwoBranchEstimator",
    "VotingHead",
    "estimation_loss",
    "encode_points",
    "predict_voting",
    "regress_nodes",
    "EstimatorOutput",
    "PointFeatures",
    "VotingField",
    "aggregate_to_sequence",
    "aggregate_votes",
    "voting_targets",
]
