"""Cone families C(S, h) and the membership oracle."""

from .families import (
    KINDS,
    TAGS,
    ConeFamily,
    boundary_at_infinity,
    parse_family,
    split_translation,
)
from .membership import (
    Certificate,
    MembershipReport,
    certificate,
    certificate_at,
    closed_form_min,
    generalized_margin,
    in_cone,
    min_form,
    ordered_map,
    shift_into_cone,
    trace_vector,
)

__all__ = [
    "KINDS",
    "TAGS",
    "Certificate",
    "ConeFamily",
    "MembershipReport",
    "boundary_at_infinity",
    "certificate",
    "certificate_at",
    "closed_form_min",
    "generalized_margin",
    "in_cone",
    "min_form",
    "ordered_map",
    "parse_family",
    "shift_into_cone",
    "split_translation",
    "trace_vector",
]
