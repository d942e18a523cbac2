"""Python bindings for the microclust library."""

from ._microclust import *  # noqa: F401,F403
from ._microclust import DataError, NumericalError, NameHistogram

__version__ = "0.1.0"
