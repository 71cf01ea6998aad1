from . import protocol
from .server import SessionHandler, ViewerServer

__all__ = ["SessionHandler", "ViewerServer", "protocol"]
