"""tenet: directed information-flow networks from investor flow panels.

Symbolic transfer entropy with surrogate significance testing, higher-order
information decompositions, information-theoretic performance bounds, and
cross-sectional pricing regressions, wired into one reproducible pipeline.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateSeriesError,
    IntegrityError,
    RowError,
    SampleSizeError,
    SchemaError,
    StageFailure,
    TenetError,
)
from .seeding import derive_seed, rng_for
from .panel import (
    DiscretizationSpec,
    FlowPanel,
    INVESTOR_TYPES,
    MATCHED_SIGNAL,
    ReturnPanel,
    SymbolSeries,
    compute_returns,
    derive_signal_columns,
    load_panel,
    resolve_signal_field,
    symbol_matrix,
    symbolize,
    zscore_by_date,
)
from .estimators import (
    KSGConfig,
    TEConfig,
    bits_to_nats,
    ksg_cmi,
    ksg_mi,
    ksg_te,
    nats_to_bits,
    plugin_entropy,
    plugin_mi,
    symbolic_te,
    symbolic_te_batch,
    te_profile,
)
from .inference import (
    BootstrapCI,
    BootstrapSpec,
    MannWhitneyResult,
    PairTestResult,
    SurrogateSpec,
    apply_fdr,
    bh_fdr,
    block_bootstrap_ci,
    block_permutation_batch,
    block_permute,
    mann_whitney_u,
    one_sample_ttest,
    pairwise_scan,
    surrogate_test,
)
from .network import (
    CentralityTable,
    DirectedWeightedGraph,
    NetworkStats,
    PanelScan,
    bellwether_ranking,
    build_network,
    centralities,
    edge_weight_comparison,
    network_stats,
    pagerank,
    rolling_density,
    scan_panel,
)
from .higher_order import (
    CTEResult,
    DirectionalityResult,
    IIResult,
    conditional_te,
    directionality_index,
    ii_cross_section,
    interaction_information,
)
from .bounds import (
    BoundsReport,
    BoundsRow,
    RiskFreeSpec,
    SignalReturnMI,
    bit_yield,
    bounds_row,
    fano_accuracy,
    kelly_rate,
    signal_return_mi,
)
from .cross_section import (
    FMResult,
    FMSpec,
    PortfolioReport,
    QuintileReport,
    fama_macbeth,
    portfolio_compare,
    quintile_assign,
    quintile_sort,
)
from .synth import (
    PlantedPanelSpec,
    coupled_chain_exact_te,
    coupled_chain_transition,
    gaussian_mi_exact,
    gen_coupled_chain,
    gen_directional_triple,
    gen_gaussian_pair,
    gen_null_panel,
    gen_planted_panel,
    markov_sample,
    oracle_te_exact,
    stationary_distribution,
)
from .pipeline import (
    STAGES,
    RunConfig,
    emit_plot_data,
    robustness_suite,
    run_pipeline,
)

__all__ = [
    "__version__",
    # errors
    "ConfigError",
    "DegenerateSeriesError",
    "IntegrityError",
    "RowError",
    "SampleSizeError",
    "SchemaError",
    "StageFailure",
    "TenetError",
    # seeding
    "derive_seed",
    "rng_for",
    # panel
    "DiscretizationSpec",
    "FlowPanel",
    "INVESTOR_TYPES",
    "MATCHED_SIGNAL",
    "ReturnPanel",
    "SymbolSeries",
    "compute_returns",
    "derive_signal_columns",
    "load_panel",
    "resolve_signal_field",
    "symbol_matrix",
    "symbolize",
    "zscore_by_date",
    # estimators
    "KSGConfig",
    "TEConfig",
    "bits_to_nats",
    "ksg_cmi",
    "ksg_mi",
    "ksg_te",
    "nats_to_bits",
    "plugin_entropy",
    "plugin_mi",
    "symbolic_te",
    "symbolic_te_batch",
    "te_profile",
    # inference
    "BootstrapCI",
    "BootstrapSpec",
    "MannWhitneyResult",
    "PairTestResult",
    "SurrogateSpec",
    "apply_fdr",
    "bh_fdr",
    "block_bootstrap_ci",
    "block_permutation_batch",
    "block_permute",
    "mann_whitney_u",
    "one_sample_ttest",
    "pairwise_scan",
    "surrogate_test",
    # network
    "CentralityTable",
    "DirectedWeightedGraph",
    "NetworkStats",
    "PanelScan",
    "bellwether_ranking",
    "build_network",
    "centralities",
    "edge_weight_comparison",
    "network_stats",
    "pagerank",
    "rolling_density",
    "scan_panel",
    # higher-order
    "CTEResult",
    "DirectionalityResult",
    "IIResult",
    "conditional_te",
    "directionality_index",
    "ii_cross_section",
    "interaction_information",
    # bounds
    "BoundsReport",
    "BoundsRow",
    "RiskFreeSpec",
    "SignalReturnMI",
    "bit_yield",
    "bounds_row",
    "fano_accuracy",
    "kelly_rate",
    "signal_return_mi",
    # cross-section
    "FMResult",
    "FMSpec",
    "PortfolioReport",
    "QuintileReport",
    "fama_macbeth",
    "portfolio_compare",
    "quintile_assign",
    "quintile_sort",
    # synthetic benchmarks
    "PlantedPanelSpec",
    "coupled_chain_exact_te",
    "coupled_chain_transition",
    "gaussian_mi_exact",
    "gen_coupled_chain",
    "gen_directional_triple",
    "gen_gaussian_pair",
    "gen_null_panel",
    "gen_planted_panel",
    "markov_sample",
    "oracle_te_exact",
    "stationary_distribution",
    # pipeline
    "STAGES",
    "RunConfig",
    "emit_plot_data",
    "robustness_suite",
    "run_pipeline",
]
