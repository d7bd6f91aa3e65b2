"""friakit: a jurisdiction-aware, five-stage fundamental-rights assessment
engine for AI systems that can reuse GDPR data-protection impact assessments.
"""

from .model import (
    Assessment,
    DpiaDescription,
    FriaDescription,
    Jurisdiction,
    NecessityDecision,
    RightsImpact,
    RiskItem,
    SystemProfile,
    new_assessment,
    validate_dpia_description,
    validate_fria_description,
)
from .catalog import (
    ConditionCatalog,
    default_conditions,
    default_mapping,
    default_rights,
    default_taxonomies,
    load_catalog,
    load_mapping_catalog,
    load_rights_catalog,
    load_taxonomy,
    tally_catalog,
)
from .necessity import classify_high_risk, evaluate_dpia_necessity, evaluate_fria_necessity
from .bridge import gap_report, import_dpia, map_dpia_to_fria, plan_dual_track
from .intake import (
    assess_purpose_compatibility,
    classify_affected_persons,
    next_questions,
    submit_answer,
)
from .risk import (
    apply_mitigations,
    default_matrix,
    enumerate_candidate_risks,
    residual_acceptability,
    score_risk,
)
from .impacts import classify_impact, derive_rights_impacts, suggest_remedies
from .reporting import (
    build_notification,
    compile_fria_report,
    export_assessment,
    import_assessment,
)

__version__ = "0.1.0"
