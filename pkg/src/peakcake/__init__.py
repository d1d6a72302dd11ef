"""Cake cutting with single-peaked valuations."""
from .allocation import (
    Allocation,
    AuditReport,
    Interval,
    audit_envy_free,
    audit_proportional,
    structure_flags,
    utilities,
    value_matrix,
)
from .efficiency import (
    ParetoVerdict,
    audit_pareto_sp,
    dominance_oracle,
    find_improvement_exchange,
    improve_to_pareto,
    welfare_metrics,
)
from .mechanisms import MECHANISMS, run_envelope_um, run_ll, run_mww, run_um, run_ww
from .oracle import Oracle, QueryLog
from .valuation import CakeInstance, SinglePeakedValuation, from_peak_density, from_peak_slope

__all__ = [
    "Allocation", "AuditReport", "CakeInstance", "Interval", "MECHANISMS", "Oracle", "ParetoVerdict",
    "QueryLog", "SinglePeakedValuation", "audit_envy_free", "audit_pareto_sp", "audit_proportional",
    "dominance_oracle", "find_improvement_exchange", "from_peak_density", "from_peak_slope",
    "improve_to_pareto", "run_envelope_um", "run_ll", "run_mww", "run_um", "run_ww", "structure_flags",
    "utilities", "value_matrix", "welfare_metrics",
]
