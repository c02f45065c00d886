"""Maximum user-centric demand scaling with CoMP selection in load-coupled C-RAN."""

from .comp import (
    JointResult,
    LinkCandidate,
    LinkCheck,
    best_rrh_association,
    check_add_link,
    joint_optimize,
)
from .errors import (
    AllZeroGainsError,
    DegenerateImageError,
    LoadScaleError,
    NonConvergentError,
    OracleGuardError,
    UnservedUeError,
    ZeroCapacityError,
)
from .network import (
    Association,
    NetworkInstance,
    capacity,
    f_alpha,
    h_max_load,
    interference_map,
    load_from_allocation,
    sinr,
)
from .solver import (
    IterationTrace,
    MaxAlphaResult,
    ScalingProblem,
    fixed_point,
    normalized_fixed_point,
    oracle_max_alpha,
    solve_max_alpha,
)

__version__ = "0.1.0"
