"""Discrete martingale optimal transport, competitor calculus, monotone
transformations and lattice Skorokhod embeddings."""

from motforge._core import *  # noqa: F401,F403
from motforge._core import __version__  # noqa: F401
