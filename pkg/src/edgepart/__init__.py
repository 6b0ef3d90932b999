"""Adaptive task-partitioning offloading for two-tier edge computing.

Library surface: domain types and validation (:mod:`edgepart.model`),
closed-form partitioning math (:mod:`edgepart.partition`), scenario and
channel generation (:mod:`edgepart.channel`), joint resource allocation
(:mod:`edgepart.allocator`), Monte Carlo sweeps (:mod:`edgepart.harness`),
and the command-line front end (:mod:`edgepart.cli`).
"""

from ._backend import backend_name
from .model import (
    Allocation,
    ChannelState,
    Instance,
    LatencyReport,
    PartitionDecision,
    SystemConfig,
    TaskSpec,
    ValidationError,
    validate_instance,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "Allocation",
    "ChannelState",
    "Instance",
    "LatencyReport",
    "PartitionDecision",
    "SystemConfig",
    "TaskSpec",
    "ValidationError",
    "validate_instance",
]
