"""Change classification by clustering change-metric vectors."""

from ._core import (
    DeltaclassError,
    cluster,
    cosine_similarity,
    functional_I,
    measure_history,
    metric_names,
    quality_from_counts,
)

__all__ = [
    "DeltaclassError",
    "cluster",
    "cosine_similarity",
    "functional_I",
    "measure_history",
    "metric_names",
    "quality_from_counts",
]
