"""Comparison machinery for fat sub-Riemannian structures.

Scalar model functions and their blow-up times, matrix Jacobi/Riccati
integration with conjugate-point detection, structural reductions for
fat distributions, canonical curvature of 3-Sasakian spheres, and the
quaternionic Hopf fibration as the worked example tying them together.
"""

from .models import (
    BlowUpTime,
    ComparisonConstants,
    DiameterCertificate,
    DomainError,
    ThetaPair,
    blowup_time_kab,
    blowup_time_kc,
    diameter_certificate,
    eval_s_kab,
    eval_s_kc,
    finiteness_predicate,
    theta_from_kappas,
    upper_bound_kab,
)
from .riccati import (
    ComparisonReport,
    JacobiSolution,
    RiccatiSolution,
    comparison_harness,
    finite_blowup_constant,
    first_blowup,
    integrate_jacobi,
    kalman_check,
    kalman_steps,
    riccati_solution,
    wedge_det_sign_changes,
    wedge_first_zero,
)
from .structure import (
    BlockMatrix,
    FatDims,
    StructuralPair,
    build_structural,
    split_I_II,
    trace_inequality_check,
    traced_typeI,
    traced_typeII,
    typeI_pair,
)
from .curvature import (
    CurvatureBlocks,
    CurvatureInputs,
    curvature_blocks,
    qhf_curvature_inputs,
    ricci_scalars,
    rodrigues,
    vee,
    z_vectors,
)
from .hopf import (
    ConjugateResult,
    ExtremalState,
    FrameBundle,
    GeodesicResult,
    SplittingFrame,
    SublaplacianReport,
    build_frames,
    canonical_splitting,
    conjugate_time,
    initial_state,
    integrate_extremal,
    qhf_kappas,
    sublaplacian_along,
)

__version__ = "0.1.0"
