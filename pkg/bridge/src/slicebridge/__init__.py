"""slicebridge: reference scorer server for the slicekit wire protocol."""

from .model import TinySeq2Seq, load_model
from .server import Bridge, serve_stdio, serve_tcp

__all__ = ["Bridge", "TinySeq2Seq", "load_model", "serve_stdio", "serve_tcp"]

__version__ = "0.1.0"
