"""Gated conditional diffusion for breast-like phantom synthesis.

Subpackages:
    engine     minimal reverse-mode autodiff core (tensors, layers, AdamW)
    data       procedural phantoms, manifests, real-image preprocessing
    maskproc   tri-channel semantic masks and their blurred (soft) form
    radiomics  67-dimensional lesion feature vector and manual sampling
    model      geometry encoder, gated fusion, conditional denoiser
    diffusion  noise schedule, training loop, DDPM/DDIM samplers
    metrics    Frechet distance, IoU / pixel accuracy, phantom segmenter
    cli        `gcdm` command-line entry point
"""

__version__ = "0.1.0"
