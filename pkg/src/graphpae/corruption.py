"""Masked-node selection and the two corruption routes: learnable-token
feature masking and eigenvector offsetting. Exactly one route is active per
forward pass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ArgumentError, ContractError
from .graph import Graph
from .spectral import SpectralBasis, distances_from_positions, offset_positions

FEATURE_PATH = "feature-path"
POSITION_PATH = "position-path"


@dataclass(frozen=True)
class CorruptionPlan:
    masked_nodes: np.ndarray  # sorted node indices
    mask_ratio: float
    mode: str
    noise_scale: float
    epoch_seed: int = 0

    def with_mode(self, mode: str) -> "CorruptionPlan":
        return CorruptionPlan(self.masked_nodes, self.mask_ratio, mode,
                              self.noise_scale, self.epoch_seed)


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """(seed, epoch) fully determines the epoch's randomness."""
    return np.random.default_rng([seed, epoch])


def sample_plan(g: Graph, ratio: float, mode: str, noise_scale: float,
                rng: np.random.Generator, epoch_seed: int = 0) -> CorruptionPlan:
    """Uniform sample of round(ratio * N) nodes without replacement."""
    if not (0.0 <= ratio <= 1.0):
        raise ArgumentError(f"mask ratio {ratio} outside [0, 1]")
    if mode not in (FEATURE_PATH, POSITION_PATH):
        raise ArgumentError(f"unknown corruption mode {mode!r}")
    count = int(round(ratio * g.num_nodes))
    chosen = rng.choice(g.num_nodes, size=count, replace=False)
    return CorruptionPlan(np.sort(chosen.astype(np.int64)), ratio, mode,
                          noise_scale, epoch_seed)


def init_mask_token(params: dict, feature_dim: int):
    # zero init, GraphMAE convention
    params["mask_token"] = ad.parameter(np.zeros(feature_dim), name="mask_token")


def mask_features(features: np.ndarray, plan: CorruptionPlan, token: ad.Tensor) -> ad.Tensor:
    """Replace masked rows by the learnable token; the result stays on the
    tape so token gradients flow."""
    if plan.mode != FEATURE_PATH:
        raise ContractError(f"mask_features requires {FEATURE_PATH}, got {plan.mode}")
    base = features.copy()
    indicator = np.zeros((features.shape[0], 1))
    if plan.masked_nodes.size:
        base[plan.masked_nodes] = 0.0
        indicator[plan.masked_nodes] = 1.0
    return ad.add(base, ad.mul(indicator, token))


def corrupt_distances(basis: SpectralBasis, g: Graph, plan: CorruptionPlan,
                      rng: np.random.Generator) -> np.ndarray:
    """Distances recomputed from offset eigenvector rows; edges with neither
    endpoint masked keep their original value bit-for-bit."""
    if plan.mode != POSITION_PATH:
        raise ContractError(f"corrupt_distances requires {POSITION_PATH}, got {plan.mode}")
    positions = offset_positions(basis, plan.masked_nodes, plan.noise_scale, rng)
    return distances_from_positions(positions, g)
