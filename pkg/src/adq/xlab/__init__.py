"""Reproducible experiment runner behind the ``adq`` command."""
from .experiments import REGISTRY, Result
from .cli import main, run

__all__ = ["REGISTRY", "Result", "main", "run"]
