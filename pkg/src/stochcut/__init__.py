"""Approximate policy iteration for the stochastic cutting stock problem."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .instance import ProblemInstance, default_paper_instance, load_instance  # noqa: E402

__all__ = ["BACKEND", "ProblemInstance", "default_paper_instance", "load_instance", "__version__"]
