"""Staggered-grid evolutionary equations with boundary control.

Discrete gradient/divergence pairs with summation-by-parts structure,
boundary data spaces and their unitary transport, well-posedness checks
and conservative time stepping for evolutionary equations, boundary
control system assembly with energy ledgers, and ready-made wave,
port-Hamiltonian, and Maxwell-type models.
"""

from .bdspace import (
    BoundaryDataSpace,
    USpace,
    boundary_triple_defect,
    build_u_space,
    compute_bd_space,
    dot_map,
    dual_projection,
    riesz_map,
)
from .control import (
    BlockPartition,
    ControlSystem,
    EnergyLedger,
    IOSamples,
    assemble_control,
    boundary_equation_defect,
    check_compatibility,
    energy_ledger,
    extract_io,
)
from .errors import (
    EvoctlError,
    HypothesisViolationError,
    InvalidGridError,
    NumericalRankError,
    PositivityError,
    ShapeMismatchError,
    StepSingularityError,
)
from .evolution import (
    EvolutionarySystem,
    TimeGrid,
    Trajectory,
    WellPosednessReport,
    causality_defect,
    check_wellposed,
    solve,
    weighted_norm,
)
from .models import (
    MaxwellLiftResult,
    PortHamiltonianSpec,
    WaveSpec,
    all_hyperbolic_indicators,
    build_mixed_type_wave,
    build_port_hamiltonian,
    build_weiss_tucsnak_wave,
    deflation_basis,
    drive,
    elliptic_residual,
    endpoint_coupling_defect,
    maxwell_lift_solve,
    scheme_states,
    three_region_indicators,
)
from .operators import Grid1D, GradDivPair, build_sbp_pair_1d, ibp_defect, minimal_projector

__all__ = [
    "EvoctlError",
    "HypothesisViolationError",
    "InvalidGridError",
    "NumericalRankError",
    "PositivityError",
    "ShapeMismatchError",
    "StepSingularityError",
    "Grid1D",
    "GradDivPair",
    "build_sbp_pair_1d",
    "ibp_defect",
    "minimal_projector",
    "BoundaryDataSpace",
    "USpace",
    "boundary_triple_defect",
    "build_u_space",
    "compute_bd_space",
    "dot_map",
    "dual_projection",
    "riesz_map",
    "EvolutionarySystem",
    "TimeGrid",
    "Trajectory",
    "WellPosednessReport",
    "causality_defect",
    "check_wellposed",
    "solve",
    "weighted_norm",
    "BlockPartition",
    "ControlSystem",
    "EnergyLedger",
    "IOSamples",
    "assemble_control",
    "boundary_equation_defect",
    "check_compatibility",
    "energy_ledger",
    "extract_io",
    "MaxwellLiftResult",
    "PortHamiltonianSpec",
    "WaveSpec",
    "all_hyperbolic_indicators",
    "build_mixed_type_wave",
    "build_port_hamiltonian",
    "build_weiss_tucsnak_wave",
    "deflation_basis",
    "drive",
    "elliptic_residual",
    "endpoint_coupling_defect",
    "maxwell_lift_solve",
    "scheme_states",
    "three_region_indicators",
]

__version__ = "0.1.0"
