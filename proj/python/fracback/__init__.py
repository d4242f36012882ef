from fracback._core import *  # noqa: F401,F403
