"""Polarimetric scattering coding and a dual-pathway convolutional classifier for PolSAR scenes.

Scenes are complex arrays of shape (h, w, 4) holding HH, HV, VH, VV.
Label grids are uint8 arrays; 255 marks ignored pixels.
"""

from ._core import (
    Model,
    PcnError,
    decode_complex,
    decode_matrix,
    decode_scene,
    encode_complex,
    encode_matrix,
    encode_scene,
    gradcheck,
    load_model,
    pf22,
    scores,
    select_training_samples,
    span,
    synthesize,
    t_test,
    train,
)

IGNORE = 255

__all__ = [
    "IGNORE",
    "Model",
    "PcnError",
    "decode_complex",
    "decode_matrix",
    "decode_scene",
    "encode_complex",
    "encode_matrix",
    "encode_scene",
    "gradcheck",
    "load_model",
    "pf22",
    "scores",
    "select_training_samples",
    "span",
    "synthesize",
    "t_test",
    "train",
]
