"""Generation-expansion planning toolkit: model builders, solvers, workflows."""

__version__ = "1.0.0"

from .model import ModelInstance, ModelError  # noqa: F401
from .system import SystemData, DataError, load_system, load_temporal  # noqa: F401
from .temporal import TemporalStructure, TemporalError  # noqa: F401
