"""Safe policy improvement with a penalized simulated model."""

from ._safepi import *  # noqa: F401,F403
from ._safepi import __doc__  # noqa: F401
