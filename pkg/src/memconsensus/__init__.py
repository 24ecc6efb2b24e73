"""Design and verification tools for second-order consensus with velocity memory."""

from .errors import (
    ComputationError,
    ConnectivityError,
    ConvergenceFloor,
    DomainError,
    GenerationError,
    GraphFormatError,
    OptimizationError,
    ParameterError,
)
from .gains import GainReport, formation_gains, gains_m1, r0_star, r1_star
from .graphs import (
    Graph,
    Spectrum,
    eigenratio,
    generate_graph,
    laplacian_spectrum,
    load_edge_list,
    parse_graph_spec,
)
from .modes import (
    ControlParams,
    PolyCoeffs,
    char_poly,
    companion_matrix,
    consensus_region_m1,
    convergence_rate,
    jury_cubic_stable,
    max_modulus_root,
    mode_radii,
    scaled_jury_residuals,
)
from .optimizer import (
    OptimizeResult,
    OptimizerConfig,
    expand_theta,
    finite_diff_gradient,
    objective,
    optimize,
    pack_params,
    warm_start,
)
from .simulate import (
    FormationPlan,
    ModeTrajectory,
    SimConfig,
    Trajectory,
    estimate_rate,
    simulate_consensus,
    simulate_formation,
    simulate_modes,
)

__version__ = "0.1.0"
