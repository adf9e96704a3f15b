"""Exact non-archimedean spectral theory at desk scale.

Characteristic power series of compact operators over p-adic coefficient
rings, Newton-polygon slope analysis, Riesz decompositions, and local
eigenalgebra construction with fiberwise eigensystem extraction.
"""

from .eigen import (
    EigensystemRecord,
    EigensystemReport,
    LocalEigenpiece,
    SpectralDatum,
    base_change_piece,
    build_local_piece,
    fiber_eigensystems,
    glue_check,
    slope_datum_search,
    validate_datum,
)
from .fredholm import (
    FredholmSeries,
    base_change_series,
    char_series,
    char_series_subset_oracle,
    fredholm_mul,
    resolvant_coefficients,
)
from .newton import (
    NewtonPolygon,
    SlopeFactorization,
    coprimality_certificate,
    delta_operator,
    evaluate_series,
    newton_polygon,
    slope_factorization,
    zero_order,
)
from .operators import (
    CompactOperatorMatrix,
    DecayProfile,
    base_change_operator,
    compose,
    operator_norm,
    truncate_finite_rank,
    verify_compactness,
)
from .riesz import (
    RieszDecomposition,
    kernel_basis,
    q_star,
    refine_factorization,
    riesz_from_factorization,
    riesz_from_zero,
    slope_decomposition,
)
from .rings import (
    INFTY,
    AffinoidElement,
    AffinoidRing,
    PadicField,
    PadicScalar,
    RingHom,
    apply_hom,
    gauss_norm,
    invert,
    parse_scalar,
    valuation,
)

__all__ = [
    "INFTY",
    "AffinoidElement",
    "AffinoidRing",
    "CompactOperatorMatrix",
    "DecayProfile",
    "EigensystemRecord",
    "EigensystemReport",
    "FredholmSeries",
    "LocalEigenpiece",
    "NewtonPolygon",
    "PadicField",
    "PadicScalar",
    "RieszDecomposition",
    "RingHom",
    "SlopeFactorization",
    "SpectralDatum",
    "apply_hom",
    "base_change_operator",
    "base_change_piece",
    "base_change_series",
    "build_local_piece",
    "char_series",
    "char_series_subset_oracle",
    "compose",
    "coprimality_certificate",
    "delta_operator",
    "evaluate_series",
    "fiber_eigensystems",
    "fredholm_mul",
    "gauss_norm",
    "glue_check",
    "invert",
    "kernel_basis",
    "newton_polygon",
    "operator_norm",
    "parse_scalar",
    "q_star",
    "refine_factorization",
    "resolvant_coefficients",
    "riesz_from_factorization",
    "riesz_from_zero",
    "slope_datum_search",
    "slope_decomposition",
    "slope_factorization",
    "truncate_finite_rank",
    "validate_datum",
    "valuation",
    "verify_compactness",
    "zero_order",
]
