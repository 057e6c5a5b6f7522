"""Deterministic scoring and feedback engine for sketch reasoning graphs."""

from .alignment import Alignment, AlignmentParams, best_alignment, f_oa, pair_weight
from .feedback import (
    Deficiency,
    FeedbackReport,
    HintTemplate,
    LoopTrace,
    NullStudent,
    SimulatedStudent,
    VisualHint,
    deficiencies,
    feedback_report,
    hints,
    loop_run,
    render_overlay,
    simulated_student,
)
from .ged import EditCostModel, GedResult, apply_edit_script, ged_beam, ged_exact, normalizer_z
from .items import ItemSpec, LabeledSample, load_dataset
from .ontology import Ontology, lca, load_ontology, sim_o
from .scoring import (
    Band,
    CalibrationRecord,
    ScoringParams,
    SimilarityBreakdown,
    band,
    calibrate,
    dominant_bloom,
    similarity,
)
from .srg import (
    BloomLevel,
    Evidence,
    Role,
    Srg,
    SrgEdge,
    SrgNode,
    parse_srg,
    serialize_srg,
    validate_against_ontology,
)

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "AlignmentParams",
    "Band",
    "BloomLevel",
    "CalibrationRecord",
    "Deficiency",
    "EditCostModel",
    "Evidence",
    "FeedbackReport",
    "GedResult",
    "HintTemplate",
    "ItemSpec",
    "LabeledSample",
    "LoopTrace",
    "NullStudent",
    "Ontology",
    "Role",
    "ScoringParams",
    "SimilarityBreakdown",
    "SimulatedStudent",
    "Srg",
    "SrgEdge",
    "SrgNode",
    "VisualHint",
    "apply_edit_script",
    "band",
    "best_alignment",
    "calibrate",
    "deficiencies",
    "dominant_bloom",
    "f_oa",
    "feedback_report",
    "ged_beam",
    "ged_exact",
    "hints",
    "lca",
    "load_dataset",
    "load_ontology",
    "loop_run",
    "normalizer_z",
    "pair_weight",
    "parse_srg",
    "render_overlay",
    "serialize_srg",
    "sim_o",
    "similarity",
    "simulated_student",
    "validate_against_ontology",
]
