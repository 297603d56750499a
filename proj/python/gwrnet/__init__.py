"""Growing self-organizing networks (GWR, Gamma-GWR) for skeleton action
recognition and body-motion assessment."""

from ._gwrnet import (
    HABITUATION_FIXED_POINT,
    Assessor,
    AssessorSpec,
    DataError,
    Error,
    FeedbackParams,
    GammaGwr,
    GammaParams,
    GngParams,
    GwrNetwork,
    GwrParams,
    Pipeline,
    PipelineSpec,
    Sequence,
    SyntheticSpec,
    UsageError,
    activity,
    compare_gng_gwr,
    gen_synthetic,
    habituate,
    iris_standardized,
    load_model,
    rates_from_counts,
    read_dataset,
    reversed,
    save_pipeline,
    with_joint_offset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
