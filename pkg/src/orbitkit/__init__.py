"""orbitkit: numerical verification of orbit-measure integral formulas,
spherical vectors and Bessel-type Fourier kernels on matrix cones."""

from .engine import (
    CapabilityError,
    Estimate,
    PoisonedSampleError,
    QuadratureSpec,
    divergence_scan,
    gauss_nodes,
    mc_integrate,
)
from .kernels import (
    BesselKernel,
    SphericalParams,
    bessel_k,
    cayley_operator_apply,
    phi_l2_verdict,
    phi_power_identity,
    phi_t,
    rank1_fourier,
    rank1_mass,
    upsilon,
)
from .measures import (
    ConePoint,
    DensityValue,
    IntegralDivergenceError,
    check_equivariance,
    density_open,
    density_rank_k,
    integrate_lebesgue_direct,
    integrate_polar,
    jacobian_Ta,
)
from .models import (
    AlgebraElement,
    CaseMismatchError,
    CompactElement,
    LeviElement,
    SingularElementError,
    UnsupportedBackendError,
    adjoint_determinant,
    character_nu,
    compact_act,
    frame,
    haar_sample_M,
    jordan_norm,
    levi_act,
    orbit_point,
    orbit_rank,
    pairing,
    peirce_restrict,
    singular_spectrum,
)
from .rankk import (
    L2Certificate,
    Rank1Sampler,
    build_rank1_sampler,
    g_l2_rank1,
    l2_certificate,
    rankk_fourier_mc,
    sample_rank1,
    stability_restriction_check,
    sum_sample_rankk,
)
from .registry import (
    AdmissibilityError,
    CaseDescriptor,
    RankError,
    UnknownCaseError,
    bessel_parameter,
    equivariance_exponent,
    l2_threshold,
    list_cases,
    lookup_case,
)
from .reports import VerificationReport, emit_report, exit_code
from .suite import run_suite

__version__ = "0.1.0"
