"""Statics, buckling and stiffness of a planar three-segment tensegrity arm.

Each segment is a pair of rigid triangles joined by a passive revolute
joint and held by two springs whose free lengths act as control inputs.
"""

from .buckling import BucklingCoefficients, classify_shape, critical_force, linearized_coefficients
from .equilibrium import (
    EquilibriumPoint,
    ManipulatorState,
    PlanarWrench,
    energy_curve,
    external_torque_me,
    find_equilibria,
    force_deflection_sweep,
    recover_wrench,
    solve_loaded_configuration,
    total_energy,
)
from .errors import (
    ConvergenceError,
    DomainError,
    InfeasibleError,
    QuasiBucklingError,
    SingularConfigurationError,
    TensegrityError,
)
from .kinematics import ChainJacobian, JointConfig, PlanarPose, forward_kinematics, inverse_kinematics, jacobian
from .segment import SegmentControls, SegmentGeometry, segment_torque, segment_torque_derivative
from .stiffness import StiffnessSet, joint_stiffness, joint_torques, loaded_stiffness, stiffness_profile

__version__ = "0.1.0"
