"""Block Lewis weights, grouped-norm sparsification and sums-of-norms solving."""

__version__ = "0.1.0"

from .grouped import (
    GroupedMatrix,
    LeverageVector,
    PartitionError,
    block_norm,
    block_norm_p,
    group_inner_norms,
    leverage_scores,
    weighted_leverage_scores,
)
from .solvers import (
    BlwCertificate,
    BlwWeights,
    InnerWeights,
    averaging_blw,
    beta_weights,
    blw_convert,
    certify_overestimate,
    compute_weights,
    contractive_blw,
    fixed_point_blw,
    inner_blw,
    psi_map,
)
from .sampling import (
    SamplingPlan,
    Sparsifier,
    build_plan,
    distortion_probe,
    draw_sparsifier,
    eval_sparsifier,
    exact_distortion_quadratic,
    sample_count,
)
from .sensitivity import SensitivityVector, lewis_lower_bounds, sensitivities, sensitivity_plan
from .msn import MsnInstance, MsnSolution, msn_objective, solve_msn, solve_msn_sparsified
