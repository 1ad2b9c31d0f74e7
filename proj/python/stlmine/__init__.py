"""Temporal-logic specification mining for glycemic time series."""

try:
    # Wheel layout: the extension lives inside the package.
    from ._stlmine import *  # noqa: F401,F403
    from . import _stlmine as _impl
except ImportError:
    # In-tree layout: the extension sits on sys.path next to the package.
    from _stlmine import *  # type: ignore  # noqa: F401,F403
    import _stlmine as _impl

__version__ = "0.1.0"
__all__ = [name for name in dir(_impl) if not name.startswith("_")]
