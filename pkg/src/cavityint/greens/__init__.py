"""Dyadic Green's functions: free space, image mirrors, planar multilayers."""
from .base import FreeSpace, GreensEvaluator
from .free import electrostatic_kernel, free_space_g, free_space_static, im_free_space_g
from .layered import (
    Constant,
    Drude,
    Layer,
    Layered,
    LayerStack,
    PerfectConductor,
    layered_scattered_g,
    layered_static_scattered,
    omega2_scattered,
)
from .mirror import ImageMirror, MirrorSpec, mirror_static_g

__all__ = [
    "GreensEvaluator",
    "FreeSpace",
    "ImageMirror",
    "Layered",
    "MirrorSpec",
    "LayerStack",
    "Layer",
    "Constant",
    "Drude",
    "PerfectConductor",
    "free_space_g",
    "im_free_space_g",
    "free_space_static",
    "electrostatic_kernel",
    "mirror_static_g",
    "layered_scattered_g",
    "layered_static_scattered",
    "omega2_scattered",
]
