"""Sim-to-real transfer toolkit for robotic cutting.

Time-series alignment, a periodic GP disturbance force model, a planar
cutting simulator with a mechanistic force model, and BC/DAgger imitation
learning against a scripted expert.
"""

try:
    from ._cutkit import *  # noqa: F401,F403  (installed package layout)
    from ._cutkit import __version__  # noqa: F401
except ImportError:  # build-tree layout: _cutkit.so next to the package on PYTHONPATH
    from _cutkit import *  # noqa: F401,F403
    from _cutkit import __version__  # noqa: F401
