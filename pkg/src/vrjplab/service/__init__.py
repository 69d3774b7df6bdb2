"""HTTP front end wrapping the experiment runner."""

from .app import create_app

__all__ = ["create_app"]
