"""Structure-grounded task corpora, residue anchoring and evaluation for antibody CDR design."""

__version__ = "0.1.0"

from .errors import ProteoTaskgenError
from .grading import aggregate_report, grade_instance, grade_text, parse_model_output
from .labels.labelset import LabelRules, LabelSet, compute_labels
from .structure.io import read_structure
from .structure.model import CdrAnnotation, Chain, Complex, Residue
from .structure.parse import parse_structure
from .tasks import GenerationSettings, TaskInstance, generate_corpus, generate_for_structure

__all__ = [
    "__version__", "ProteoTaskgenError", "Complex", "Chain", "Residue", "CdrAnnotation",
    "read_structure", "parse_structure", "LabelRules", "LabelSet", "compute_labels",
    "TaskInstance", "GenerationSettings", "generate_for_structure", "generate_corpus",
    "parse_model_output", "grade_instance", "grade_text", "aggregate_report",
]
