"""cantorspec: a numerical laboratory for the spectra of one-dimensional
quasiperiodic Schrodinger operators with discontinuous monotone potentials.

Submodules:
  numerics   extended reals, Cayley circle geometry, continued fractions
  potentials potential families, monotonicity audits, glued circle maps
  hull       the auxiliary Cantor set and the extended parameter circle
  spectra    transfer matrices, bands, blocks, Green's functions, Lyapunov
  perturb    rank-one gap flows, infinite coupling, Cayley transforms
  analysis   Hausdorff distances, winding numbers, gap filling, inequalities
  report     record streams, SVG and figure emission
  cli        the cantor-spec command-line front end
"""

from .numerics import (
    INF,
    Arc,
    ArcPath,
    BetaEstimate,
    DiophantineParams,
    DomainError,
    Frequency,
    arc_path_between,
    beta_estimate,
    cayley,
    cayley_angle,
    continued_fraction,
    diophantine_probe,
    ext,
    inverse_cayley,
    is_inf,
)
from .potentials import (
    CircleMapTilde,
    ModifiedPotential,
    Potential,
    check_gamma_monotone,
    classify,
    degree,
    make_builtin,
    make_tilde,
)
from .hull import HullModel, HullPoint
from .spectra import (
    PeriodicBlock,
    SpectrumSet,
    TransferMatrix,
    block_eigenvalues,
    discriminant_bands,
    green_00,
    lyapunov,
    sturm_eigenvalues,
    transfer_product,
    union_spectrum_over_theta,
)
from .perturb import (
    GapFlowCurve,
    GeneralizedOperator,
    build_generalized,
    cayley_matrix,
    gap_eigenvalue,
    strong_convergence_probe,
    trace_gap_flow,
    verify_norm_bound,
)
from .analysis import (
    BandStatistics,
    band_stats,
    cantor_trend,
    decay_rate,
    det_winding,
    gap_filling_check,
    hausdorff_distance,
    lemma_main_verify,
)

__version__ = "0.1.0"
