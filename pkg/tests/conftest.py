"""Shared test helpers: random graphs and a deterministic full-loss closure."""

from __future__ import annotations

import numpy as np

from graphpae import autodiff as ad
from graphpae import corruption, objectives
from graphpae.corruption import FEATURE_PATH, POSITION_PATH
from graphpae.encoder import EncoderConfig, encoder_forward
from graphpae.graph import Graph, build_csr
from graphpae.spectral import normalized_laplacian, relative_distances, topk_eigenpairs
from graphpae.trainer import RunConfig, compute_basis, init_params


def random_graph(n, p, seed, feature_dim=5, with_edge_ids=False, ensure_connected=True):
    """Erdos-Renyi graph with standard-normal features; optionally a ring is
    added so that no node is isolated."""
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    if ensure_connected:
        pairs += [(i, (i + 1) % n) for i in range(n)]
    edge_ids = [(i + j) % 3 for i, j in pairs] if with_edge_ids else None
    indptr, indices, _, ids = build_csr(n, pairs, edge_ids)
    feats = rng.standard_normal((n, feature_dim))
    return Graph(n, indptr, indices, feats, edge_feature_ids=ids)


def generic_params(cfg: RunConfig, feature_dim: int, seed: int = 0, scale: float = 0.1):
    """Initial parameters with every zero-initialized array (biases, mask
    token) nudged to small random values.

    Central finite differences are only valid at points where the network is
    differentiable; the all-zeros init puts ReLU pre-activations of masked
    rows exactly at their kink, so gradient checks run at a generic point.
    """
    params = init_params(cfg, feature_dim)
    rng = np.random.default_rng([seed, 0xD1CE])
    for p in params.values():
        if np.all(p.data == 0.0):
            p.data = p.data + scale * rng.standard_normal(p.data.shape)
    return params


def full_loss_closure(g: Graph, cfg: RunConfig, params: dict, plan_seed: int = 0):
    """Deterministic closure computing the complete two-pass objective.

    The corruption plan and the corrupted distance map are sampled once, so
    repeated calls (as in finite-difference checks) evaluate the same
    function of the parameters.
    """
    basis = compute_basis(g, cfg.num_eigenvectors)
    distances = relative_distances(basis, g)
    rng = np.random.default_rng([plan_seed, 17])
    plan = corruption.sample_plan(g, cfg.mask_ratio, FEATURE_PATH, cfg.noise_scale, rng)
    corrupted = corruption.corrupt_distances(basis, g, plan.with_mode(POSITION_PATH), rng)
    edge_idx, denom = objectives.pos_loss_edges(g, plan.masked_nodes)

    def fn():
        x_masked = corruption.mask_features(g.node_features, plan, params["mask_token"])
        x_latent, _ = encoder_forward(g, x_masked, distances, params, cfg.encoder)
        x_rec = objectives.decode_features(x_latent, params)
        loss_feat = objectives.sce_loss(g.node_features, x_rec, plan.masked_nodes,
                                        cfg.sce_gamma)
        _, p_latent = encoder_forward(g, g.node_features, corrupted, params, cfg.encoder)
        p_rec = objectives.decode_positions(p_latent, edge_idx, params)
        loss_pos = objectives.huber_pos_loss(distances, p_rec, edge_idx, denom)
        return objectives.total_loss(loss_feat, loss_pos, cfg.loss_alpha)

    return fn


def dense_laplacian_oracle(g: Graph) -> np.ndarray:
    """Brute-force dense normalized Laplacian built entry by entry,
    independent of the sparse implementation under test."""
    n = g.num_nodes
    a = np.zeros((n, n))
    dst, src = g.edge_endpoints()
    for i, j in zip(dst, src):
        a[i, j] = 1.0
    deg = a.sum(axis=1)
    lap = np.eye(n)
    for i in range(n):
        for j in range(n):
            if a[i, j] and deg[i] > 0 and deg[j] > 0:
                lap[i, j] -= a[i, j] / np.sqrt(deg[i] * deg[j])
    return lap
