"""Conditional tabular GAN: column transforms, conditional sampling, model."""

from .model import (
    GanConfig,
    GeneratorModel,
    fit_generator,
    generate,
    load_generator,
    save_generator,
    save_loss_trace,
)

__all__ = [
    "GanConfig",
    "GeneratorModel",
    "fit_generator",
    "generate",
    "load_generator",
    "save_generator",
    "save_loss_trace",
]
