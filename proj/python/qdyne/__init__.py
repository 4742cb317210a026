from ._qdyne import *  # noqa: F401,F403
from ._qdyne import __doc__  # noqa: F401
