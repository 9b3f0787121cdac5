"""gridmapf: gridworld multi-agent path finding toolkit.

Environment with reward and blocking semantics, partial observations,
environment sampling, centralized solvers (CBS, OD-recursive M*), expert
demonstration generation, training-loss functions, a decentralized execution
runtime with an external-policy wire protocol, and a benchmark harness.
"""

__version__ = "0.1.0"
