"""Autodiff core and neural text classifiers."""
from .autodiff import Tensor
from .nets import (ARCHITECTURES, NetConfig, TrainedNet, net_scores, train_cnn, train_fcnn,
                   train_lstm, train_net, validation_loss)
from .optim import Adam

__all__ = ["ARCHITECTURES", "Adam", "NetConfig", "Tensor", "TrainedNet", "net_scores", "train_cnn",
           "train_fcnn", "train_lstm", "train_net", "validation_loss"]
