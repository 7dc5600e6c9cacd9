"""Structure parsing, canonical complexes and CDR annotations."""

from .cdr import AnnotationDocument, apply_cdr_mask, load_annotation_document, load_cdr_annotations
from .io import complex_from_json, complex_to_json, read_structure, to_mmcif, to_pdb
from .model import AtomRecord, CdrAnnotation, Chain, Complex, Residue
from .parse import parse_structure

__all__ = [
    "AnnotationDocument", "AtomRecord", "CdrAnnotation", "Chain", "Complex", "Residue",
    "apply_cdr_mask", "complex_from_json", "complex_to_json", "load_annotation_document",
    "load_cdr_annotations", "parse_structure", "read_structure", "to_mmcif", "to_pdb",
]
