"""Numerical laboratory for spectral gaps of group actions.

Builds reversible chains, Cayley and Schreier graphs, and group averaging
operators from worked examples, and computes spectral radii, restricted
operator norms, Cheeger constants, expander certificates, and Lyapunov
exponent bounds at desk scale.
"""

from .errors import (
    BudgetExceededError,
    ConvergenceError,
    DisconnectedChainError,
    NotReversibleError,
    SgapError,
    UnsupportedVariantError,
    VariantMismatchError,
)
from .group_algebra import (
    FreeWord,
    MatModP,
    MatZ,
    ProbMeasure,
    ReturnProbabilitySeries,
    check_adapted,
    convolve,
    convolution_power,
    free_word,
    group_closure,
    identity_like,
    inverse,
    mat_mod_p,
    mat_z,
    mul,
    special_linear_order,
    spectral_radius_return,
)
from .markov_core import (
    SpectralReport,
    WeightedChain,
    apply_markov,
    chain_from_json,
    chain_spectrum,
    chain_to_json,
    check_detailed_balance,
    dirichlet_form,
    lambda1,
    operator_norm_l20,
)
from .cheeger import (
    CutReport,
    area_coarea_check,
    cheeger_exact,
    cheeger_sweep,
    cut_ratio,
    verify_cheeger,
)
from .walk_models import (
    HalfLineSpec,
    LabeledGraph,
    build_bernoulli_schreier,
    build_cayley,
    build_pgl2_halfline,
    build_torus_schreier,
    build_tree,
    elementary_generators,
    graph_to_edge_list_text,
    graph_to_simple_walk_chain,
    pgl2_cheeger_bound,
    sanov_generators,
)
from .spectral_engine import (
    CompressionLadder,
    compressed_norm,
    compression_ladder,
    expander_bound_check,
    radial_rayleigh,
    tensor_power_check,
)
from .expanders import (
    FamilyCertificate,
    MemberRecord,
    build_family,
    expanding_constant_report,
)
from .lyapunov import (
    LyapunovEstimate,
    MatrixMeasure,
    estimate_lyapunov,
    exact_u_n,
    furstenberg_bound,
    sanov_group_measure,
    sanov_matrix_measure,
)

__version__ = "0.1.0"
