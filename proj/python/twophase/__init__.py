"""Python bindings for the twophase C++ core."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__, version  # noqa: F401

__version__ = version().split("+")[0]
