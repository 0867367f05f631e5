"""Feature/position decoders and the reconstruction losses."""

from __future__ import annotations

import logging

import numpy as np

from . import autodiff as ad
from .encoder import EncoderConfig, _glorot
from .graph import Graph

log = logging.getLogger(__name__)

NORM_EPS = 1e-12


def init_decoder_params(params: dict, cfg: EncoderConfig, feature_dim: int,
                        rng: np.random.Generator):
    h, c = cfg.hidden, cfg.coeff_dim

    def reg(name, arr):
        params[name] = ad.parameter(arr, name=name)

    reg("dec_x/w1", _glorot(rng, (h, h)))
    reg("dec_x/b1", np.zeros(h))
    reg("dec_x/w2", _glorot(rng, (h, feature_dim)))
    reg("dec_x/b2", np.zeros(feature_dim))
    reg("dec_p/w1", _glorot(rng, (c, c)))
    reg("dec_p/b1", np.zeros(c))
    reg("dec_p/w2", _glorot(rng, (c, 1)))
    reg("dec_p/b2", np.zeros(1))


def decode_features(x_latent: ad.Tensor, params: dict) -> ad.Tensor:
    """Two-layer ReLU perceptron mapping hidden width back to feature space."""
    hid = ad.relu(ad.matmul(x_latent, params["dec_x/w1"]) + params["dec_x/b1"])
    return ad.matmul(hid, params["dec_x/w2"]) + params["dec_x/b2"]


def sce_loss(x_true: np.ndarray, x_pred: ad.Tensor, masked: np.ndarray,
             gamma: float) -> ad.Tensor:
    """Scaled cosine error, mean over masked rows: (1 - cos(x, x'))^gamma."""
    if masked.size == 0:
        return ad.Tensor(0.0)
    xt = x_true[masked]
    xp = ad.gather_rows(x_pred, masked)
    nt = np.linalg.norm(xt, axis=1)
    if np.any(nt == 0.0) or np.any(np.linalg.norm(xp.data, axis=1) == 0.0):
        log.warning("zero-norm row in SCE; cosine treated as 0 for that term")
    dot = ad.sum_(ad.mul(xp, xt), axis=1)
    np_pred = ad.sqrt(ad.sum_(ad.square(xp), axis=1) + 1e-24)
    denom = ad.mul(np_pred, nt) + NORM_EPS
    cos = ad.div(dot, denom)
    return ad.mean(ad.powc(ad.sub(1.0, cos), gamma))


def pos_loss_edges(g: Graph, masked: np.ndarray):
    """Index set of the position loss: stored directed edges (i, j) with the
    center i masked; self-loops carry no distance signal and are excluded.

    Returns (edge_indices, denominator = sum of |N_i| over masked nodes).
    """
    dst, src = g.edge_endpoints()
    in_mask = np.zeros(g.num_nodes, dtype=bool)
    in_mask[masked] = True
    sel = in_mask[dst] & (dst != src)
    return np.flatnonzero(sel), int(sel.sum())


def decode_positions(p_latent: ad.Tensor, edge_indices: np.ndarray,
                     params: dict) -> ad.Tensor:
    """Scalar nonnegative distance prediction per selected edge (softplus output)."""
    sel = ad.gather_rows(p_latent, edge_indices)
    hid = ad.relu(ad.matmul(sel, params["dec_p/w1"]) + params["dec_p/b1"])
    out = ad.matmul(hid, params["dec_p/w2"]) + params["dec_p/b2"]
    return ad.reshape(ad.softplus(out), (edge_indices.shape[0],))


def huber_pos_loss(p_true: np.ndarray, p_pred: ad.Tensor, edge_indices: np.ndarray,
                   denom: int) -> ad.Tensor:
    """Huber distance-reconstruction loss, normalized by the masked-neighborhood
    size, not the number of selected edges (they coincide here)."""
    if denom == 0:
        log.warning("position loss has an empty index set (masked nodes isolated)")
        return ad.Tensor(0.0)
    diff = ad.sub(p_pred, p_true[edge_indices])
    return ad.mul(ad.sum_(ad.huber(diff)), 1.0 / denom)


def total_loss(loss_feat: ad.Tensor, loss_pos: ad.Tensor, alpha: float) -> ad.Tensor:
    return ad.add(loss_feat, ad.mul(loss_pos, alpha))
