from .evaluate import PredictionRecord, evaluate
from .forest import (
    DEFAULT_N_TREES,
    ForestModel,
    VoteTally,
    forest_classify,
    forest_votes,
    oob_accuracy,
    train_forest,
)
from .neural import PerceptronNet, nn_classify, nn_loss_and_gradient, train_nn
from .serialize import MODEL_FORMAT_VERSION, load_model, model_from_dict, model_to_dict, save_model
from .tree import (
    DecisionTree,
    TreeNode,
    TreeParams,
    gini_impurity,
    prune_tree,
    train_pruned_tree,
    train_tree,
)
from .wnd import WND_EXPONENT, WndModel, build_wnd_model, wnd5_classify, wnd5_distance

__all__ = [
    "DEFAULT_N_TREES",
    "DecisionTree",
    "ForestModel",
    "MODEL_FORMAT_VERSION",
    "PerceptronNet",
    "PredictionRecord",
    "TreeNode",
    "TreeParams",
    "VoteTally",
    "WND_EXPONENT",
    "WndModel",
    "build_wnd_model",
    "evaluate",
    "forest_classify",
    "forest_votes",
    "gini_impurity",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "nn_classify",
    "nn_loss_and_gradient",
    "oob_accuracy",
    "prune_tree",
    "save_model",
    "train_forest",
    "train_nn",
    "train_pruned_tree",
    "train_tree",
    "wnd5_classify",
    "wnd5_distance",
]
