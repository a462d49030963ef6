"""Event-driven simulator of dynamic lightpath provisioning in C/C+L elastic
optical networks, with delay- and compression-aware strategies."""

from .engine import PeakSchedule, SimConfig, load_config, run, run_batch
from .metrics import MetricsReport, blocking_probability, hourly_utilization, relative_bp
from .provisioning import STRATEGIES
from .qot import DEFAULT_MODULATION_TABLE, ModulationRow, QotEstimatorSpec
from .spectrum import BandPlan, Lightpath, SlotRange, SpectrumGrid
from .topology import NetworkTopology, load_topology, sample_endpoints
from .traffic import Request, TrafficTypeSpec, default_traffic_types

__version__ = "0.1.0"

__all__ = [
    "BandPlan",
    "DEFAULT_MODULATION_TABLE",
    "Lightpath",
    "MetricsReport",
    "ModulationRow",
    "NetworkTopology",
    "PeakSchedule",
    "QotEstimatorSpec",
    "Request",
    "STRATEGIES",
    "SimConfig",
    "SlotRange",
    "SpectrumGrid",
    "TrafficTypeSpec",
    "blocking_probability",
    "default_traffic_types",
    "hourly_utilization",
    "load_config",
    "load_topology",
    "relative_bp",
    "run",
    "run_batch",
    "sample_endpoints",
]
