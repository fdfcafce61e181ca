"""Multi-access coded caching with uncoded placement: placement, delivery, decoding and rate analysis."""

from .params import (
    InvalidDemands,
    InvalidParams,
    SystemParams,
    UnsupportedParameters,
    accessible_subfiles,
    missing_subfiles,
    mod_index,
    resolve_user,
)
from .placement import CacheContents, place, user_view
from .delivery import (
    CodedSymbol,
    SizeMismatch,
    TermRef,
    TransmissionSchedule,
    Variant,
    build_schedule,
    encode_payloads,
    format_schedule,
    schedule_rate,
)
from .decoder import (
    CacheView,
    DecodeIncomplete,
    DecodePlan,
    lemma_decode_map,
    peel_decode,
    verify_plan_consistency,
)
from .analysis import RatePoint, convex_envelope, rate_ic, rate_lb, rate_new

__version__ = "0.1.0"
