"""Lesion radiomics: 67 features across shape, histogram, GLSZM, GLCM."""

from gcdm.radiomics.firstorder import FIRSTORDER_NAMES, firstorder_features
from gcdm.radiomics.quantize import N_LEVELS, quantize
from gcdm.radiomics.shape2d import CIRCULARITY_GRID_BOUND, SHAPE_NAMES, shape_features
from gcdm.radiomics.texture import (
    GLCM_NAMES,
    GLCM_OFFSETS,
    GLSZM_NAMES,
    cooccurrence_matrix,
    glcm_features,
    glszm_features,
    zone_matrix,
)
from gcdm.radiomics.vector import (
    FEATURE_NAMES,
    N_FEATURES,
    SEGMENTS,
    FeatureNormalizer,
    FeatureTemplate,
    extract,
    load_normalizer,
    load_template,
    sample_manual,
    save_normalizer,
    save_template,
)

__all__ = [
    "CIRCULARITY_GRID_BOUND",
    "FEATURE_NAMES",
    "FIRSTORDER_NAMES",
    "FeatureNormalizer",
    "FeatureTemplate",
    "GLCM_NAMES",
    "GLCM_OFFSETS",
    "GLSZM_NAMES",
    "N_FEATURES",
    "N_LEVELS",
    "SEGMENTS",
    "SHAPE_NAMES",
    "cooccurrence_matrix",
    "extract",
    "firstorder_features",
    "glcm_features",
    "glszm_features",
    "load_normalizer",
    "load_template",
    "quantize",
    "sample_manual",
    "save_normalizer",
    "save_template",
    "shape_features",
    "zone_matrix",
]
