from ._crnnn import *  # noqa: F401,F403
