from ._dpca import *  # noqa: F401,F403
from ._dpca import InputError, ProtocolError  # noqa: F401
