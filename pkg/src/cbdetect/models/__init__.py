"""Classifier families: logistic regression, random forest, perceptron stack."""

from cbdetect.models.forest import Forest, RFConfig, Tree, forest_probs, predict_forest, train_random_forest
from cbdetect.models.logistic import (
    LogisticModel,
    logreg_decision,
    logreg_loss_and_grads,
    logreg_probs,
    predict_logreg,
    train_logreg,
)
from cbdetect.models.mlp import (
    MLPConfig,
    MLPModel,
    batch_norm_forward,
    dropout_forward,
    fit_mlp,
    mlp_loss_and_grads,
    mlp_probs,
    predict_mlp,
    prelu,
    train_mlp,
)

__all__ = [
    "Forest",
    "LogisticModel",
    "MLPConfig",
    "MLPModel",
    "RFConfig",
    "Tree",
    "batch_norm_forward",
    "dropout_forward",
    "fit_mlp",
    "forest_probs",
    "logreg_decision",
    "logreg_loss_and_grads",
    "logreg_probs",
    "mlp_loss_and_grads",
    "mlp_probs",
    "predict_forest",
    "predict_logreg",
    "predict_mlp",
    "prelu",
    "train_logreg",
    "train_mlp",
    "train_random_forest",
]
