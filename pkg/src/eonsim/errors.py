"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class TopologyError(SimulationError):
    """Invalid topology file or graph structure."""


class ConfigError(SimulationError):
    """Invalid simulation configuration."""


class GridStateError(SimulationError):
    """Spectrum grid driven into an inconsistent state (engine bug)."""
