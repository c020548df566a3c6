"""Constrained imitation learning on a tilting marble maze.

A maximum-entropy discrete actor-critic is trained under a Lagrangian
constraint term that pulls the policy toward expert demonstrations; the
package bundles the benchmark environment, demonstration tooling (scripted
expert, recording service), and the evaluation harness.
"""

__version__ = "0.1.0"

from . import checkpoint, demos, env, evaluate, expert, nets, optim, sac, trainer

__all__ = [
    "__version__",
    "checkpoint",
    "demos",
    "env",
    "evaluate",
    "expert",
    "nets",
    "optim",
    "sac",
    "trainer",
]
