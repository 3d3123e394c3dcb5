"""FCNN, CNN and LSTM text classifiers trained with Adam and early stopping."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .. import _serial
from ..errors import ConfigError, DataError, NumericError
from . import autodiff as ad
from .optim import Adam

ARCHITECTURES = ("fcnn", "cnn", "lstm")


@dataclass(frozen=True)
class NetConfig:
    """Hyperparameters shared by the three architectures.

    ``units`` sizes the FCNN hidden layer and the LSTM state; ``filters``
    and ``kernel_size`` configure the CNN. ``fcnn_order`` selects where the
    FCNN flattens: ``"flatten_first"`` feeds the concatenated embeddings to
    the hidden layer, ``"dense_first"`` applies the hidden layer to each
    position before flattening.
    """

    embedding_dim: int = 16
    units: int = 16
    filters: int = 16
    kernel_size: int = 3
    pool_size: int | None = None
    layer_dropout: float = 0.0
    dropout_rate: float = 0.5
    learning_rate: float = 0.005
    batch_size: int = 64
    epochs: int = 10
    patience: int = 2
    l2_strength: float = 0.0
    max_vocab: int = 2000
    max_len: int = 24
    seed: int = 0
    bidirectional: bool = False
    fcnn_order: str = "flatten_first"
    forget_bias: float = 0.0

    def __post_init__(self):
        for name in ("embedding_dim", "units", "filters", "kernel_size", "batch_size", "epochs",
                     "patience", "max_vocab", "max_len"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.pool_size is not None and self.pool_size < 1:
            raise ConfigError("pool_size must be >= 1")
        for name in ("dropout_rate", "layer_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if self.learning_rate <= 0 or self.l2_strength < 0:
            raise ConfigError("need learning_rate > 0 and l2_strength >= 0")
        if self.fcnn_order not in ("flatten_first", "dense_first"):
            raise ConfigError(f"unknown fcnn_order {self.fcnn_order!r}")

    def replace(self, **changes):
        known = {f.name for f in fields(self)}
        unknown = set(changes) - known
        if unknown:
            raise ConfigError(f"unknown network settings: {sorted(unknown)}")
        return NetConfig(**{**asdict(self), **changes})


@dataclass(frozen=True)
class TrainedNet:
    arch: str
    config: NetConfig
    params: dict
    best_epoch: int
    history: tuple = field(default=(), compare=False)

    def to_dict(self):
        arrays, _ = _serial.encode_params(self.params)
        return {"format": _serial.FORMAT, "version": _serial.VERSION, "kind": self.arch,
                "config": asdict(self.config), "best_epoch": self.best_epoch,
                "history": [[None if math.isnan(v) else v for v in h] for h in self.history],
                "arrays": arrays}

    @classmethod
    def from_dict(cls, d):
        _serial.check_envelope(d)
        return cls(d["kind"], NetConfig(**d["config"]), _serial.decode_params(d["arrays"], {}),
                   int(d["best_epoch"]),
                   tuple(tuple(math.nan if v is None else v for v in h) for h in d.get("history", ())))


def xavier_uniform(rng, shape, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(arch, cfg: NetConfig, rng) -> dict:
    """Xavier-uniform weights and zero biases (plus ``forget_bias`` on the LSTM forget gate)."""
    V, E, L = cfg.max_vocab + 1, cfg.embedding_dim, cfg.max_len
    p = {"embedding": xavier_uniform(rng, (V, E), V, E)}
    if arch == "fcnn":
        U = cfg.units
        fan = L * E if cfg.fcnn_order == "flatten_first" else E
        p["hidden_w"] = xavier_uniform(rng, (fan, U), fan, U)
        p["hidden_b"] = np.zeros(U)
        head = U if cfg.fcnn_order == "flatten_first" else L * U
    elif arch == "cnn":
        K, F = cfg.kernel_size, cfg.filters
        if K > L:
            raise ConfigError("kernel_size must not exceed max_len")
        p["conv_w"] = xavier_uniform(rng, (K, E, F), K * E, K * F)
        p["conv_b"] = np.zeros(F)
        pool = L if cfg.pool_size is None else min(cfg.pool_size, L)
        head = (L // pool) * F
    elif arch == "lstm":
        H = cfg.units
        for d in ("fw", "bw") if cfg.bidirectional else ("fw",):
            p[f"lstm_{d}_wx"] = xavier_uniform(rng, (E, 4 * H), E, 4 * H)
            p[f"lstm_{d}_wh"] = xavier_uniform(rng, (H, 4 * H), H, 4 * H)
            b = np.zeros(4 * H)
            b[H:2 * H] = cfg.forget_bias
            p[f"lstm_{d}_b"] = b
        head = 2 * H if cfg.bidirectional else H
    else:
        raise ConfigError(f"unknown architecture {arch!r}")
    p["out_w"] = xavier_uniform(rng, (head, 1), head, 1)
    p["out_b"] = np.zeros(1)
    return p


def forward(arch, cfg: NetConfig, params, ids, training=False, rng=None):
    """Logits of shape (batch, 1) for integer sequences ``ids`` (batch, max_len)."""
    x = ad.embedding(params["embedding"], ids)
    x = ad.dropout(x, cfg.dropout_rate, rng, training)
    if arch == "fcnn":
        if cfg.fcnn_order == "flatten_first":
            h = ad.relu(ad.dense(ad.flatten(x), params["hidden_w"], params["hidden_b"]))
        else:
            h = ad.flatten(ad.relu(ad.dense(x, params["hidden_w"], params["hidden_b"])))
    elif arch == "cnn":
        c = ad.relu(ad.conv1d(x, params["conv_w"], params["conv_b"]))
        h = ad.flatten(ad.maxpool1d(c, cfg.pool_size))
    else:
        h = ad.lstm(x, params["lstm_fw_wx"], params["lstm_fw_wh"], params["lstm_fw_b"])
        if cfg.bidirectional:
            hb = ad.lstm(x, params["lstm_bw_wx"], params["lstm_bw_wh"], params["lstm_bw_b"], reverse=True)
            h = ad.concat([h, hb], axis=1)
        h = ad.dropout(h, cfg.layer_dropout, rng, training)
    return ad.dense(h, params["out_w"], params["out_b"])


def _check_ids(ids, cfg):
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 2 or ids.shape[1] != cfg.max_len:
        raise DataError(f"sequences must have shape (n, {cfg.max_len}), got {ids.shape}")
    if ids.size and (ids.min() < 0 or ids.max() > cfg.max_vocab):
        raise DataError(f"token ids must lie in [0, {cfg.max_vocab}]")
    return ids


def _logits(arch, cfg, params, ids, chunk=1024):
    tensors = {k: ad.Tensor(v) for k, v in params.items()}
    out = [forward(arch, cfg, tensors, ids[lo:lo + chunk]).data[:, 0] for lo in range(0, len(ids), chunk)]
    return np.concatenate(out) if out else np.zeros(0)


def _bce_from_logits(z, y):
    return float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))


def net_logits(net: TrainedNet, ids) -> np.ndarray:
    return _logits(net.arch, net.config, net.params, _check_ids(ids, net.config))


def net_scores(net: TrainedNet, ids) -> np.ndarray:
    """Positive-class probabilities."""
    return ad._sigmoid(net_logits(net, ids))


def validation_loss(net: TrainedNet, ids, y) -> float:
    return _bce_from_logits(net_logits(net, ids), np.asarray(y, dtype=np.float64))


def train_net(arch, X, y, valid, config: NetConfig = NetConfig(), early_stopping=True) -> TrainedNet:
    """Train one network with mini-batch Adam and early stopping.

    Each epoch visits the training rows in a fresh seeded permutation
    (the last batch may be short). After every epoch the validation loss
    is measured in evaluation mode; training stops once it has not
    improved for ``patience`` epochs, and the weights of the best epoch
    are returned. The loss is mean binary cross-entropy plus
    ``l2_strength`` times the squared norm of the non-bias weights.

    With ``early_stopping=False`` all ``epochs`` epochs run and the last
    weights are kept; ``valid`` may then be ``None`` (its loss is recorded
    as NaN).
    """
    if arch not in ARCHITECTURES:
        raise ConfigError(f"unknown architecture {arch!r}")
    cfg = config
    X = _check_ids(X, cfg)
    y = np.asarray(y, dtype=np.float64).ravel()
    if valid is None:
        if early_stopping:
            raise DataError("early stopping needs a validation set")
        Xv, yv = np.zeros((0, cfg.max_len), dtype=np.int64), np.zeros(0)
    else:
        Xv, yv = _check_ids(valid[0], cfg), np.asarray(valid[1], dtype=np.float64).ravel()
        if len(Xv) == 0 and early_stopping:
            raise DataError("empty validation set")
    if len(X) != len(y) or len(Xv) != len(yv):
        raise DataError("sequence and label counts differ")
    if len(X) == 0:
        raise DataError("empty training set")
    rng = np.random.default_rng(cfg.seed)
    params = {k: ad.Tensor(v, requires_grad=True) for k, v in init_params(arch, cfg, rng).items()}
    decay = [t for k, t in params.items() if not k.endswith("_b")]
    opt = Adam(params.values(), cfg.learning_rate)
    history = []
    best = (math.inf, 0, None)
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(X))
        total = 0.0
        for lo in range(0, len(X), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            opt.zero_grad()
            data_loss = ad.bce_with_logits(forward(arch, cfg, params, X[idx], True, rng), y[idx])
            loss = data_loss
            if cfg.l2_strength > 0:
                for t in decay:
                    loss = loss + cfg.l2_strength * ad.sum_squares(t)
            loss.backward()
            opt.step()
            total += float(data_loss.data) * len(idx)
        snapshot = {k: t.data.copy() for k, t in params.items()}
        v_loss = _bce_from_logits(_logits(arch, cfg, snapshot, Xv), yv) if len(Xv) else math.nan
        if not (math.isfinite(total) and all(np.isfinite(a).all() for a in snapshot.values())):
            raise NumericError(f"{arch} training diverged at epoch {epoch}")
        history.append((total / len(X), v_loss))
        if not early_stopping:
            best = (v_loss, epoch, snapshot)
        elif not math.isfinite(v_loss):
            raise NumericError(f"{arch} validation loss is not finite at epoch {epoch}")
        elif v_loss < best[0]:
            best = (v_loss, epoch, snapshot)
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return TrainedNet(arch, cfg, best[2], best[1], tuple(history))


def train_fcnn(X, y, valid, config: NetConfig = NetConfig()) -> TrainedNet:
    """Embedding, dropout, ReLU hidden layer and a sigmoid output unit."""
    return train_net("fcnn", X, y, valid, config)


def train_cnn(X, y, valid, config: NetConfig = NetConfig()) -> TrainedNet:
    """Embedding, dropout, zero-padded ReLU convolution, max-pooling and a sigmoid output unit."""
    return train_net("cnn", X, y, valid, config)


def train_lstm(X, y, valid, config: NetConfig = NetConfig()) -> TrainedNet:
    """Embedding, dropout, (bidirectional) LSTM final state and a sigmoid output unit."""
    return train_net("lstm", X, y, valid, config)
