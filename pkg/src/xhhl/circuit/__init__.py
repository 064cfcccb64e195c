from .ir import (
    CircuitMetrics,
    Gate,
    NonNativeGateError,
    QuantumCircuit,
    UnitaryCapError,
    circuit_unitary,
    dumps,
    evolution_unitary,
    loads,
    metrics,
    simulate,
)
from .synthesis import decompose_to_native, kak_gates, multiplexor_gates, qsd_gates

__all__ = [
    "CircuitMetrics", "Gate", "NonNativeGateError", "QuantumCircuit", "UnitaryCapError",
    "circuit_unitary", "decompose_to_native", "dumps", "evolution_unitary", "kak_gates",
    "loads", "metrics", "multiplexor_gates", "qsd_gates", "simulate",
]
