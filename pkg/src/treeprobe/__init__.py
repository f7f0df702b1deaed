"""Self-supervised tree topological probing toolkit."""

from .constraints import (
    ConstraintSetEnumeration,
    DepthSequence,
    distance,
    enumerate_all,
    max_oracle,
    min_oracle,
    sorted_profiles,
    validate,
)
from .geometry import (
    PlantedSpec,
    band_violation,
    build_synthetic_corpus,
    projected_norms,
    random_depth_sequence,
    sample_planted,
    transport_map,
    transported_spec,
)
from .greedy import (
    GreedyTrace,
    PredictedDepths,
    assign_in_order,
    assign_reversed,
    greedy_farthest,
    greedy_nearest,
    greedy_profile,
    greedy_trace,
    sorted_gaps_within_one,
)
from .ingest import (
    Corpus,
    DepthAnnotation,
    SentenceEmbedding,
    attach_annotations,
    gold_targets,
    read_conllu_depths,
    read_depths,
    read_embeddings,
    read_jsonl_depths,
    select_mode,
    select_mode_corpus,
    write_embeddings,
    write_jsonl_depths,
)
from .metrics import (
    BoundsPosition,
    MetricReport,
    RangeGroup,
    aggregate,
    combine_with_density,
    group_by_ranges,
    neg_log,
    position_between_bounds,
    reports_to_csv,
    reports_to_json,
    unbiased_sp,
)
from .probe import (
    ProbeMatrix,
    TrainConfig,
    evaluate,
    gradient,
    loss,
    loss_selfsup,
    masked_loss,
    predict_depths,
    train,
)

__all__ = [
    "BoundsPosition",
    "ConstraintSetEnumeration",
    "Corpus",
    "DepthAnnotation",
    "DepthSequence",
    "GreedyTrace",
    "MetricReport",
    "PlantedSpec",
    "PredictedDepths",
    "ProbeMatrix",
    "RangeGroup",
    "SentenceEmbedding",
    "TrainConfig",
    "aggregate",
    "assign_in_order",
    "assign_reversed",
    "attach_annotations",
    "band_violation",
    "build_synthetic_corpus",
    "combine_with_density",
    "distance",
    "enumerate_all",
    "evaluate",
    "gold_targets",
    "gradient",
    "greedy_farthest",
    "greedy_nearest",
    "greedy_profile",
    "greedy_trace",
    "group_by_ranges",
    "loss",
    "loss_selfsup",
    "masked_loss",
    "max_oracle",
    "min_oracle",
    "neg_log",
    "position_between_bounds",
    "predict_depths",
    "projected_norms",
    "random_depth_sequence",
    "read_conllu_depths",
    "read_depths",
    "read_embeddings",
    "read_jsonl_depths",
    "reports_to_csv",
    "reports_to_json",
    "sample_planted",
    "select_mode",
    "select_mode_corpus",
    "sorted_gaps_within_one",
    "sorted_profiles",
    "train",
    "transport_map",
    "transported_spec",
    "unbiased_sp",
    "validate",
    "write_embeddings",
    "write_jsonl_depths",
]
