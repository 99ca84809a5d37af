"""Learnable cosine-modulated Gaussian filterbank with soft self-attention."""

from ._rawatt import *  # noqa: F401,F403
from ._rawatt import __doc__  # noqa: F401

__version__ = "0.1.0"
