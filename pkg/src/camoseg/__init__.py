"""camoseg: training-free camouflaged-object segmentation.

A single task-generic text prompt (e.g. "camouflaged object") is expanded
per image into instance-specific text prompts by a multimodal chat model,
converted into in-box foreground/background point prompts via relevance
heatmaps, fed to a promptable segmenter in a coarse-to-fine loop, and the
final mask is picked by consistency voting over parallel repetitions.
All model backends are pluggable; deterministic synthetic backends allow
fully offline end-to-end runs.
"""

from ._kernels import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from .geometry import Box, ImageRef

__version__ = "0.1.0"

__all__ = ["Box", "ImageRef", "KERNEL_IMPLEMENTATION", "__version__"]
