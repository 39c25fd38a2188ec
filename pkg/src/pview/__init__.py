"""Differentially private materialized views for range counting queries.

Build once with a fixed privacy budget, then answer any number of range
counts from the published view, each with a runtime error-bound estimate.
"""

from ._version import __version__
from .errors import (
    AtomicBlockError,
    DataError,
    DomainTooLargeError,
    FormatError,
    MalformedRecordError,
    PViewError,
    SchemaHashMismatchError,
    VersionMismatchError,
)
from .mechanisms import (
    NoiseFreeStream,
    RandomStream,
    exponential_choice,
    exponential_weights,
    sample_laplace,
    sample_laplace_array,
)
from .tensor import (
    AttributeSpec,
    Block,
    CountTensor,
    Schema,
    iter_cells,
    load_csv,
    load_schema,
    load_table,
    root_block,
    save_schema,
    split_block,
    subregion_block,
)
from .partition import (
    CutRecord,
    Hyperparams,
    MechanismParams,
    PartitionResult,
    aggregation_error,
    ae_sensitivity,
    biased_ae,
    budget_breakdown,
    build_view,
    converge_test,
    cut_candidates,
    cut_qualities,
    cut_qualities_reference,
    derive_params,
    perturb,
    quality,
    quality_sensitivity,
    random_cut,
    recursive_bisection,
)
from .view import (
    BuildMeta,
    ErrorBound,
    PView,
    RangeQuery,
    ViewBlock,
    answer,
    answer_exact,
    blocks_touched,
    deserialize,
    error_bounds,
    estimate_xi,
    load_view,
    map_endpoints,
    save_view,
    serialize,
    to_json,
    validate_query,
)
from .evaluate import (
    Workload,
    format_report,
    gen_kway_marginal,
    gen_kway_range,
    gen_prefix,
    gen_random_range,
    identity_view,
    index_schema,
    make_clustered_tensor,
    make_concentrated_tensor,
    make_uniform_tensor,
    rmse,
    run_experiment,
)

__all__ = [
    "__version__",
    "AtomicBlockError",
    "DataError",
    "DomainTooLargeError",
    "FormatError",
    "MalformedRecordError",
    "PViewError",
    "SchemaHashMismatchError",
    "VersionMismatchError",
    "NoiseFreeStream",
    "RandomStream",
    "exponential_choice",
    "exponential_weights",
    "sample_laplace",
    "sample_laplace_array",
    "AttributeSpec",
    "Block",
    "CountTensor",
    "Schema",
    "iter_cells",
    "load_csv",
    "load_schema",
    "load_table",
    "root_block",
    "save_schema",
    "split_block",
    "subregion_block",
    "CutRecord",
    "Hyperparams",
    "MechanismParams",
    "PartitionResult",
    "aggregation_error",
    "ae_sensitivity",
    "biased_ae",
    "budget_breakdown",
    "build_view",
    "converge_test",
    "cut_candidates",
    "cut_qualities",
    "cut_qualities_reference",
    "derive_params",
    "perturb",
    "quality",
    "quality_sensitivity",
    "random_cut",
    "recursive_bisection",
    "BuildMeta",
    "ErrorBound",
    "PView",
    "RangeQuery",
    "ViewBlock",
    "answer",
    "answer_exact",
    "blocks_touched",
    "deserialize",
    "error_bounds",
    "estimate_xi",
    "load_view",
    "map_endpoints",
    "save_view",
    "serialize",
    "to_json",
    "validate_query",
    "Workload",
    "format_report",
    "gen_kway_marginal",
    "gen_kway_range",
    "gen_prefix",
    "gen_random_range",
    "identity_view",
    "index_schema",
    "make_clustered_tensor",
    "make_concentrated_tensor",
    "make_uniform_tensor",
    "rmse",
    "run_experiment",
]
