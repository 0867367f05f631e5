"""GraphPAE: positional graph autoencoder with dual-path masked pretraining."""

from .encoder import EncoderConfig, encoder_forward
from .graph import Graph, GraphCollection, load_graph, make_sbm
from .spectral import SpectralBasis, normalized_laplacian, relative_distances, topk_eigenpairs
from .trainer import RunConfig, pretrain

__all__ = [
    "EncoderConfig",
    "Graph",
    "GraphCollection",
    "RunConfig",
    "SpectralBasis",
    "encoder_forward",
    "load_graph",
    "make_sbm",
    "normalized_laplacian",
    "pretrain",
    "relative_distances",
    "topk_eigenpairs",
]

__version__ = "0.1.0"
