"""Safe learning-augmented control of a water-pump schedule."""

from ._laoc import *  # noqa: F401,F403
from ._laoc import __doc__  # noqa: F401
