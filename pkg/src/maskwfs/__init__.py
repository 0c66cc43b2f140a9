"""Lensless wavefront sensing with a binary mask.

A focused, aberrated beam passes a thin binary mask; the far-field
intensity is inverted back to the complex beam either by a trained
encoder/twin-decoder network or by classical ER/HIO phase retrieval.
"""

__version__ = "0.1.0"

from .dataset import GenConfig, canonicalize_phase, forward_pattern, generate_corpus, open_corpus, read_corpus
from .estimators import IterativeRetriever, NeuralRetriever, PatternNormalizer
from .iterative import IterConfig, retrieve_iterative
from .network import Architecture, infer, init_params
from .optics import (
    ComplexField,
    Grid,
    MaskModel,
    ZernikeCoeffs,
    angular_spectrum_propagate,
    default_grid,
    default_mask,
    multislice_mask_transit,
    synthesize_focused_object,
)
from .training import TrainConfig, fit_network, train

__all__ = [
    "Architecture",
    "ComplexField",
    "GenConfig",
    "Grid",
    "IterConfig",
    "IterativeRetriever",
    "MaskModel",
    "NeuralRetriever",
    "PatternNormalizer",
    "TrainConfig",
    "ZernikeCoeffs",
    "angular_spectrum_propagate",
    "canonicalize_phase",
    "default_grid",
    "default_mask",
    "fit_network",
    "forward_pattern",
    "generate_corpus",
    "infer",
    "init_params",
    "multislice_mask_transit",
    "open_corpus",
    "read_corpus",
    "retrieve_iterative",
    "synthesize_focused_object",
    "train",
]
