"""End-to-end pretraining: per-epoch corruption, the two reconstruction
passes, one combined optimizer step, checkpointing, and CSV logging."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from . import checkpoint as ckpt
from . import corruption, objectives
from .corruption import FEATURE_PATH, POSITION_PATH
from .encoder import EncoderConfig, encoder_forward, init_encoder_params
from .errors import ArgumentError, NumericalError
from .graph import Graph, GraphCollection
from .optim import Adam
from .spectral import SpectralBasis, normalized_laplacian, relative_distances, topk_eigenpairs


@dataclass
class RunConfig:
    epochs: int = 200
    mask_ratio: float = 0.25
    noise_scale: float = 0.01
    loss_alpha: float = 0.1
    sce_gamma: float = 2.0
    num_eigenvectors: int = 16
    lr: float = 1e-3
    weight_decay: float = 0.0
    seed: int = 0
    batch_size: int = 32
    pooling: str = "mean"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def __post_init__(self):
        if self.epochs < 1:
            raise ArgumentError("epochs must be >= 1")
        if self.sce_gamma < 1.0:
            raise ArgumentError("sce_gamma must be >= 1")
        if self.loss_alpha < 0.0:
            raise ArgumentError("loss_alpha must be >= 0")


@dataclass
class EpochRecord:
    epoch: int
    loss_feat: float
    loss_pos: float
    loss_total: float
    seconds: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,loss_feat,loss_pos,loss_total,seconds\n")
            for r in self.records:
                fh.write(f"{r.epoch},{r.loss_feat!r},{r.loss_pos!r},{r.loss_total!r},{r.seconds:.3f}\n")


def compute_basis(g: Graph, k: int, seed: int = 0) -> SpectralBasis:
    lap = normalized_laplacian(g)
    return topk_eigenpairs(lap, min(k, g.num_nodes), seed=seed)


def init_params(cfg: RunConfig, feature_dim: int) -> dict[str, ad.Tensor]:
    rng = np.random.default_rng([cfg.seed, 0xC0FFEE])
    params: dict[str, ad.Tensor] = {}
    corruption.init_mask_token(params, feature_dim)
    init_encoder_params(params, cfg.encoder, feature_dim, rng)
    objectives.init_decoder_params(params, cfg.encoder, feature_dim, rng)
    return params


def graph_losses(g: Graph, basis: SpectralBasis, distances: np.ndarray,
                 params: dict, cfg: RunConfig, rng: np.random.Generator):
    """Both reconstruction passes on one graph under a shared masked set.

    Pass A encodes masked features with clean distances; pass B encodes clean
    features with corrupted distances. Returns (loss_feat, loss_pos).
    """
    plan = corruption.sample_plan(g, cfg.mask_ratio, FEATURE_PATH, cfg.noise_scale, rng)

    x_masked = corruption.mask_features(g.node_features, plan, params["mask_token"])
    x_latent, _ = encoder_forward(g, x_masked, distances, params, cfg.encoder,
                                  training=True, rng=rng)
    x_rec = objectives.decode_features(x_latent, params)
    loss_feat = objectives.sce_loss(g.node_features, x_rec, plan.masked_nodes, cfg.sce_gamma)

    plan_pos = plan.with_mode(POSITION_PATH)
    corrupted = corruption.corrupt_distances(basis, g, plan_pos, rng)
    _, p_latent = encoder_forward(g, g.node_features, corrupted, params, cfg.encoder,
                                  training=True, rng=rng)
    edge_idx, denom = objectives.pos_loss_edges(g, plan.masked_nodes)
    p_rec = objectives.decode_positions(p_latent, edge_idx, params)
    loss_pos = objectives.huber_pos_loss(distances, p_rec, edge_idx, denom)
    return loss_feat, loss_pos


def pretrain(data: Graph | GraphCollection, cfg: RunConfig,
             params: dict | None = None, optimizer: Adam | None = None,
             start_epoch: int = 0, checkpoint_path=None,
             checkpoint_every: int = 0):
    """Algorithm-1 training loop. Returns (params, TrainLog).

    Resumable: pass params/optimizer/start_epoch from `load_checkpoint`; the
    per-epoch rng is derived from (seed, epoch), so a resumed run reproduces
    the uninterrupted trajectory bit-for-bit.
    """
    graphs = data.graphs if isinstance(data, GraphCollection) else [data]
    feature_dim = graphs[0].feature_dim

    if params is None:
        params = init_params(cfg, feature_dim)
    if optimizer is None:
        optimizer = Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)

    bases = [compute_basis(g, cfg.num_eigenvectors, seed=cfg.seed) for g in graphs]
    distances = [relative_distances(b, g) for b, g in zip(bases, graphs)]

    log = TrainLog()
    for epoch in range(start_epoch, cfg.epochs):
        t0 = time.perf_counter()
        rng = corruption.epoch_rng(cfg.seed, epoch)
        order = np.arange(len(graphs)) if len(graphs) == 1 else rng.permutation(len(graphs))
        feat_sum = pos_sum = total_sum = 0.0
        nbatches = 0
        for lo in range(0, len(order), cfg.batch_size):
            batch = order[lo:lo + cfg.batch_size]
            optimizer.zero_grad()
            lf_parts, lp_parts = [], []
            for gi in batch:
                lf, lp = graph_losses(graphs[gi], bases[gi], distances[gi], params, cfg, rng)
                lf_parts.append(lf)
                lp_parts.append(lp)
            scale = 1.0 / len(batch)
            loss_feat = ad.mul(_sum_tensors(lf_parts), scale)
            loss_pos = ad.mul(_sum_tensors(lp_parts), scale)
            loss = objectives.total_loss(loss_feat, loss_pos, cfg.loss_alpha)
            if not np.isfinite(loss.data):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}: "
                    f"feat={float(loss_feat.data)} pos={float(loss_pos.data)}")
            ad.backward(loss)
            optimizer.step()
            feat_sum += float(loss_feat.data)
            pos_sum += float(loss_pos.data)
            total_sum += float(loss.data)
            nbatches += 1
        log.records.append(EpochRecord(epoch, feat_sum / nbatches, pos_sum / nbatches,
                                       total_sum / nbatches, time.perf_counter() - t0))
        if checkpoint_path and checkpoint_every and (epoch + 1) % checkpoint_every == 0:
            save_checkpoint(checkpoint_path, params, optimizer, epoch + 1)
    if checkpoint_path:
        save_checkpoint(checkpoint_path, params, optimizer, cfg.epochs)
    return params, log


def _sum_tensors(parts):
    acc = parts[0]
    for t in parts[1:]:
        acc = ad.add(acc, t)
    return acc


def save_checkpoint(path, params: dict, optimizer: Adam | None = None, epoch: int = 0):
    arrays = {f"param/{k}": p.data for k, p in params.items()}
    arrays["meta/epoch"] = np.array([float(epoch)])
    if optimizer is not None:
        arrays.update(optimizer.state_arrays())
    ckpt.save_arrays(path, arrays)


def load_checkpoint(path, cfg: RunConfig, feature_dim: int):
    """Rebuild (params, optimizer, epoch) from a checkpoint file."""
    arrays = ckpt.load_arrays(path)
    params = init_params(cfg, feature_dim)
    for name, p in params.items():
        key = f"param/{name}"
        if key not in arrays:
            raise ArgumentError(f"checkpoint missing parameter {name}")
        if arrays[key].shape != p.data.shape:
            raise ArgumentError(
                f"checkpoint shape {arrays[key].shape} != expected {p.data.shape} for {name}")
        p.data = arrays[key]
    optimizer = Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    if "adam/t" in arrays:
        optimizer.load_state_arrays(arrays)
    epoch = int(arrays["meta/epoch"][0]) if "meta/epoch" in arrays else 0
    return params, optimizer, epoch
