"""Window-based correlated decoding for transversal-gate surface-code circuits."""

from .circuits import (
    Block,
    CircuitError,
    Gate,
    GadgetT,
    LogicalCircuit,
    LogicalMeasurement,
    MagicInit,
    NotSpatiallyWindowable,
    ParseError,
    SyndromeExtraction,
    TransversalGates,
    block_partition,
    builtin_example,
    parse_circuit,
    serialize_circuit,
)
from .decoders import (
    DecodeResult,
    DecodingInstance,
    InfeasibleSyndromeError,
    InstanceEdge,
    component_decompose,
    decode_bruteforce,
    decode_mle,
    export_lp,
    verify_solution,
)
from .estimator import (
    FactoryModelConfig,
    PlatformParams,
    addition_time,
    cat_state_depth,
    error_rate_reduction,
    factory_space_model,
    logical_error_per_round,
    lookup_time,
    qec_rounds,
    space_reduction,
    total_ratio,
)
from .fixup import (
    FrameState,
    GadgetRecord,
    choose_basis,
    gadget_records,
    process_s_measurement,
    sequential_resolution,
    teleport_recovery,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    RatioRow,
    ResultRow,
    compare_windowed,
    emit_results,
    load_config,
    run_experiment,
)
from .hypergraph import (
    Check,
    DecodingHypergraph,
    Hyperedge,
    build_checks,
    build_hypergraph,
    dump_hypergraph,
    enumerate_events,
    merge_events,
    parse_hypergraph_dump,
    propagate_event,
    restrict_to_window,
    weight,
)
from .noise import (
    ErrorEvent,
    NoiseModel,
    ShotResult,
    compose_checks,
    inject_events,
    sample_shot,
)
from .surface import PhysicalCircuit, SurfaceCodeSpec, expand_to_physical, patch_layout
from .windows import (
    ResidualSyndromeError,
    WindowPlan,
    WindowSpec,
    auto_split_independent,
    classify_hyperedge,
    plan_spatial_feedforward,
    plan_spatial_parallel,
    plan_temporal,
    plan_to_text,
    run_windowed_decode,
    s_persistence_report,
)

__version__ = "0.1.0"
