"""Phase-noise and LO-distribution simulator for mm-wave massive MIMO uplinks."""
from .phase_noise import PhaseNoisePsd, PhaseTrace, PllParams
from .lo_arch import IfStage, LoArchitecture, element_traces
from .power_model import PowerModelParams, sweep_power, total_lo_power
from .channel import LinkBudget, los_channel
from .rx_dsp import CarrierRecoveryParams
from .sim import SimConfig, SimMetrics, run_uplink

__all__ = [
    "PhaseNoisePsd", "PhaseTrace", "PllParams", "IfStage", "LoArchitecture",
    "element_traces", "PowerModelParams", "sweep_power", "total_lo_power",
    "LinkBudget", "los_channel", "CarrierRecoveryParams", "SimConfig",
    "SimMetrics", "run_uplink",
]
