"""Desk-scale laboratory for differentiable-neural-computer experiments with
state-space constrained controllers.

Submodules are imported explicitly (``dnclab.core``, ``dnclab.tasks``, ...)
so the CLI can configure threading before numpy loads.
"""

__version__ = "0.1.0"
