"""Hyperdimensional visual question answering.

Thin re-export of the compiled core. Hypervectors are 1-D float64 numpy
arrays; images are (28, 28, 3) float32 arrays in [0, 1].
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
