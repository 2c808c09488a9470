"""Processing: filtering, aggregation, scoring, and masking of flat tables."""

from .aggregate import (
    ACTIVITY_INDEX_NAME,
    activity_index,
    aggregate_daily_mean,
    aggregate_daily_sum,
)
from .filters import (
    OutlierMode,
    OutlierPolicy,
    filter_outliers,
    select_date_range,
    select_users,
)
from .masking import (
    MASK_KEY_ENV,
    MaskKey,
    full_digest,
    mask_identifiers,
    pseudonymize,
)
from .scoring import (
    PHQ9_BANDS,
    PHQ9_INSTRUMENT,
    RejectedResponse,
    RiskScoreRow,
    ScoreOutcome,
    ScoreRegistry,
    band_label,
    default_score_registry,
    load_bands,
    make_phq9_scorer,
    phq9_definition,
    score_phq9,
)

__all__ = [
    "ACTIVITY_INDEX_NAME",
    "MASK_KEY_ENV",
    "MaskKey",
    "OutlierMode",
    "OutlierPolicy",
    "PHQ9_BANDS",
    "PHQ9_INSTRUMENT",
    "RejectedResponse",
    "RiskScoreRow",
    "ScoreOutcome",
    "ScoreRegistry",
    "activity_index",
    "aggregate_daily_mean",
    "aggregate_daily_sum",
    "band_label",
    "default_score_registry",
    "filter_outliers",
    "full_digest",
    "load_bands",
    "make_phq9_scorer",
    "mask_identifiers",
    "phq9_definition",
    "pseudonymize",
    "score_phq9",
    "select_date_range",
    "select_users",
]
