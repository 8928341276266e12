"""Closed-form entropic optimal transport between Gaussian measures."""

from ._gaussot import *  # noqa: F401,F403
from ._gaussot import __doc__  # noqa: F401

__version__ = "0.1.0"
