from .core import *  # noqa: F401,F403
from .drs import *  # noqa: F401,F403
from .solver import *  # noqa: F401,F403
