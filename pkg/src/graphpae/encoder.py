"""Dual-path message-passing encoder.

Each layer computes per-edge attention coefficients from the endpoint node
representations, combines them with the edge-wise positional representation,
and uses the normalized sum as the message weight (feature path). The raw,
pre-normalization coefficients additively refine the positional
representation (position path).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ArgumentError, ShapeError
from .graph import Graph

GAT = "gat"
GATEDGCN = "gatedgcn"


@dataclass(frozen=True)
class EncoderConfig:
    layers: int = 2
    hidden: int = 64
    attention: str = GATEDGCN
    heads: int = 4
    rbf_count: int = 128
    rbf_low: float = 0.0
    rbf_high: float = 2.0
    rbf_sigma: float | None = None  # default: center spacing
    dropout: float = 0.0
    edge_dropout: float = 0.0
    edge_vocab: int | None = None
    activation_after_agg: bool = True

    def __post_init__(self):
        if self.layers < 1:
            raise ArgumentError("layers must be >= 1")
        if self.rbf_count < 1:
            raise ArgumentError("rbf_count must be >= 1")
        if self.attention not in (GAT, GATEDGCN):
            raise ArgumentError(f"unknown attention kind {self.attention!r}")
        if self.attention == GAT and self.hidden % self.heads != 0:
            raise ArgumentError(f"hidden={self.hidden} not divisible by heads={self.heads}")

    @property
    def coeff_dim(self) -> int:
        """Width of attention coefficients and positional representations:
        number of heads for GAT, the hidden width for GatedGCN."""
        return self.heads if self.attention == GAT else self.hidden

    def rbf_centers(self) -> np.ndarray:
        if self.rbf_count == 1:
            return np.array([self.rbf_low])
        return np.linspace(self.rbf_low, self.rbf_high, self.rbf_count)

    def sigma(self) -> float:
        if self.rbf_sigma is not None:
            return self.rbf_sigma
        if self.rbf_count == 1:
            return 1.0
        return (self.rbf_high - self.rbf_low) / (self.rbf_count - 1)


def _glorot(rng, shape):
    fan_in, fan_out = shape[0], shape[-1]
    scale = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-scale, scale, size=shape)


def init_encoder_params(params: dict, cfg: EncoderConfig, feature_dim: int,
                        rng: np.random.Generator):
    h, c = cfg.hidden, cfg.coeff_dim

    def reg(name, arr):
        params[name] = ad.parameter(arr, name=name)

    reg("lift/w", _glorot(rng, (feature_dim, h)))
    reg("lift/b", np.zeros(h))
    reg("rbf/w1", _glorot(rng, (cfg.rbf_count, c)))
    reg("rbf/b1", np.zeros(c))
    reg("rbf/w2", _glorot(rng, (c, c)))
    reg("rbf/b2", np.zeros(c))
    for l in range(cfg.layers):
        if cfg.attention == GAT:
            reg(f"layer{l}/att/W", _glorot(rng, (h, h)))
            reg(f"layer{l}/att/al", 0.1 * rng.standard_normal(h))
            reg(f"layer{l}/att/ar", 0.1 * rng.standard_normal(h))
        else:
            reg(f"layer{l}/att/W1", _glorot(rng, (h, h)))
            reg(f"layer{l}/att/W2", _glorot(rng, (h, h)))
            reg(f"layer{l}/att/b", np.zeros(h))
        reg(f"layer{l}/msg/w1", _glorot(rng, (h, h)))
        reg(f"layer{l}/msg/b1", np.zeros(h))
        reg(f"layer{l}/msg/w2", _glorot(rng, (h, h)))
        reg(f"layer{l}/msg/b2", np.zeros(h))
    if cfg.edge_vocab:
        reg("edge_emb", 0.1 * rng.standard_normal((cfg.edge_vocab, c)))


def gaussian_rbf_features(distances: np.ndarray, cfg: EncoderConfig) -> np.ndarray:
    """exp(-(p - mu_k)^2 / (2 sigma^2)) for each center; plain NumPy since
    distances carry no gradient."""
    centers = cfg.rbf_centers()
    sigma = cfg.sigma()
    diff = distances[:, None] - centers[None, :]
    return np.exp(-diff * diff / (2.0 * sigma * sigma))


def rbf_lift(distances: np.ndarray, params: dict, cfg: EncoderConfig) -> ad.Tensor:
    """Lift scalar edge distances to coeff_dim-wide representations through
    Gaussian bases and a 2-layer perceptron."""
    g = ad.Tensor(gaussian_rbf_features(distances, cfg))
    hid = ad.relu(ad.matmul(g, params["rbf/w1"]) + params["rbf/b1"])
    return ad.matmul(hid, params["rbf/w2"]) + params["rbf/b2"]


def feature_lift(x: ad.Tensor | np.ndarray, params: dict) -> ad.Tensor:
    return ad.matmul(ad.as_tensor(x), params["lift/w"]) + params["lift/b"]


def attention_gat(h: ad.Tensor, dst, src, params, cfg: EncoderConfig, layer: int) -> ad.Tensor:
    """Per-head LeakyReLU(w^T [W x_i || W x_j]) raw scores, shape (E, heads)."""
    wx = ad.matmul(h, params[f"layer{layer}/att/W"])
    lhs = ad.mul(ad.gather_rows(wx, dst), params[f"layer{layer}/att/al"])
    rhs = ad.mul(ad.gather_rows(wx, src), params[f"layer{layer}/att/ar"])
    per_head = ad.reshape(lhs + rhs, (dst.shape[0], cfg.heads, cfg.hidden // cfg.heads))
    return ad.leaky_relu(ad.sum_(per_head, axis=-1))


def attention_gatedgcn(h: ad.Tensor, dst, src, params, cfg: EncoderConfig, layer: int) -> ad.Tensor:
    """Sigmoid(W1 x_i + W2 x_j + b) gates, shape (E, hidden)."""
    lhs = ad.gather_rows(ad.matmul(h, params[f"layer{layer}/att/W1"]), dst)
    rhs = ad.gather_rows(ad.matmul(h, params[f"layer{layer}/att/W2"]), src)
    return ad.sigmoid(lhs + rhs + params[f"layer{layer}/att/b"])


def encoder_forward(g: Graph, x_in, edge_distances: np.ndarray, params: dict,
                    cfg: EncoderConfig, training: bool = False,
                    rng: np.random.Generator | None = None):
    """Run the dual-path encoder; returns (X^(L), P^(L)) as tensors of shape
    (N, hidden) and (E, coeff_dim)."""
    if edge_distances.shape[0] != g.num_edges:
        raise ShapeError(f"{edge_distances.shape[0]} distances for {g.num_edges} edges")
    if training and rng is None:
        raise ArgumentError("training mode requires an rng for dropout")
    dst, src = g.edge_endpoints()
    deg = g.degrees()
    inv_deg = np.zeros_like(deg)
    inv_deg[deg > 0] = 1.0 / deg[deg > 0]
    inv_deg_e = inv_deg[dst][:, None]

    h = feature_lift(x_in, params)
    p = rbf_lift(edge_distances, params, cfg)

    for l in range(cfg.layers):
        if cfg.attention == GAT:
            alpha = attention_gat(h, dst, src, params, cfg, l)
        else:
            alpha = attention_gatedgcn(h, dst, src, params, cfg, l)
        if cfg.edge_vocab and g.edge_feature_ids is not None:
            alpha = alpha + ad.gather_rows(params["edge_emb"], g.edge_feature_ids)

        coeff = alpha + p
        if cfg.attention == GAT:
            weight = ad.segment_softmax(coeff, dst, g.num_nodes)
        else:
            weight = ad.mul(coeff, inv_deg_e)
        if training and cfg.edge_dropout > 0:
            weight = ad.dropout(weight, cfg.edge_dropout, rng)

        msg = ad.relu(ad.matmul(h, params[f"layer{l}/msg/w1"]) + params[f"layer{l}/msg/b1"])
        msg = ad.matmul(msg, params[f"layer{l}/msg/w2"]) + params[f"layer{l}/msg/b2"]
        msg_e = ad.gather_rows(msg, src)

        if cfg.attention == GAT:
            e = dst.shape[0]
            hh = cfg.hidden // cfg.heads
            weighted = ad.mul(ad.reshape(weight, (e, cfg.heads, 1)),
                              ad.reshape(msg_e, (e, cfg.heads, hh)))
            weighted = ad.reshape(weighted, (e, cfg.hidden))
        else:
            weighted = ad.mul(weight, msg_e)

        h = ad.segment_sum(weighted, dst, g.num_nodes)
        if cfg.activation_after_agg and l < cfg.layers - 1:
            h = ad.relu(h)
        if training and cfg.dropout > 0:
            h = ad.dropout(h, cfg.dropout, rng)

        # position path: raw pre-normalization coefficients refine positions
        p = alpha + p

    return h, p
