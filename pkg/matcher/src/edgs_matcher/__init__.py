"""Dense-matcher adapter: image pairs in, EDGC correspondence files out."""

from .adapter import (DEFAULT_MAX_RECORDS, DEFAULT_MIN_CONFIDENCE, MatchResult,
                      export_plan, load_image, match_pair)
from .backends import BACKENDS, MatcherUnavailable, get_backend
from .plan import NeighborPlan, PlanImage, load_plan

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MAX_RECORDS", "DEFAULT_MIN_CONFIDENCE", "MatchResult",
    "export_plan", "load_image", "match_pair",
    "BACKENDS", "MatcherUnavailable", "get_backend",
    "NeighborPlan", "PlanImage", "load_plan",
]
