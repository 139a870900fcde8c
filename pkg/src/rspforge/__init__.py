"""rspforge: exact simulation and checking of remote state preparation protocols."""

__version__ = "0.1.0"

from .qstate import (
    ATOL,
    DensityMatrix,
    QuantumChannel,
    UnitaryOp,
    apply_channel,
    apply_unitary,
    measure_computational,
    partial_trace,
    tensor,
    trace_distance,
)
from .groups import (
    ALL_ANGLES,
    Angle,
    OperationGroup,
    enumerate_single_qubit_cliffords,
    group_by_name,
    haar_unitary,
)
from .resources import IdealResource, resource_by_name
from .protocols import (
    Transcript,
    protocol1_run,
    protocol2_run,
    protocol2_then_3_run,
    protocol3_run,
    protocol4_run,
    protocol5_run,
)
from .security import (
    AttackStrategy,
    SecurityReport,
    VerificationError,
    advantage,
    composition_loss_check,
    evaluate_strategy,
    protocol2_sweep,
    verify_perfect_construction,
    world_pair,
)
from .seeding import derive_rng
from .cli import RunConfig, run, sweep_csv

__all__ = [
    "ATOL",
    "ALL_ANGLES",
    "Angle",
    "AttackStrategy",
    "DensityMatrix",
    "IdealResource",
    "OperationGroup",
    "QuantumChannel",
    "RunConfig",
    "SecurityReport",
    "Transcript",
    "UnitaryOp",
    "VerificationError",
    "advantage",
    "apply_channel",
    "apply_unitary",
    "composition_loss_check",
    "derive_rng",
    "enumerate_single_qubit_cliffords",
    "evaluate_strategy",
    "group_by_name",
    "haar_unitary",
    "measure_computational",
    "partial_trace",
    "protocol1_run",
    "protocol2_run",
    "protocol2_then_3_run",
    "protocol3_run",
    "protocol4_run",
    "protocol5_run",
    "protocol2_sweep",
    "resource_by_name",
    "run",
    "sweep_csv",
    "tensor",
    "trace_distance",
    "verify_perfect_construction",
    "world_pair",
    "__version__",
]
