"""Escalation-risk scoring for support tickets.

Pipeline: ingest event logs -> expand tickets into snapshots and compute
the 22-field feature vector -> train an oversampled random forest ->
evaluate with recall/precision/summarization -> serve ranked open tickets
with analyst MER/CER tracking.
"""

__version__ = "0.1.0"

from .domain import (
    FEATURE_ARITY,
    FEATURE_NAMES,
    EscalationRecord,
    EscalationRisk,
    EscalationType,
    EventKind,
    FeatureVector,
    SupportTicket,
    TicketEvent,
    classify_escalation_type,
)

__all__ = [
    "FEATURE_ARITY",
    "FEATURE_NAMES",
    "EscalationRecord",
    "EscalationRisk",
    "EscalationType",
    "EventKind",
    "FeatureVector",
    "SupportTicket",
    "TicketEvent",
    "classify_escalation_type",
    "__version__",
]
