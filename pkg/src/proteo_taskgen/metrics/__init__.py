"""Antibody design evaluation metrics."""

from .design import (DesignReport, DesignResult, aggregate_design, evaluate_design, format_consistency_table,
                     format_design_report, format_geometry_table)
from .sequence import (CdrPrediction, LoopPrediction, aar, detection_metrics, global_align, if_aar_delta,
                       residue_metrics, sequence_metrics)
from .structure import (StructurePair, angle_histogram, backbone_dihedrals, clash_counts, count_clashes, jsd,
                        jsd_backbone, kabsch, pooled_jsd_backbone, rmsd_ca)

__all__ = [
    "CdrPrediction", "LoopPrediction", "StructurePair", "DesignResult", "DesignReport",
    "detection_metrics", "sequence_metrics", "residue_metrics", "global_align", "aar", "if_aar_delta",
    "rmsd_ca", "kabsch", "clash_counts", "count_clashes", "jsd", "jsd_backbone", "pooled_jsd_backbone",
    "angle_histogram", "backbone_dihedrals", "evaluate_design", "aggregate_design",
    "format_design_report", "format_geometry_table", "format_consistency_table",
]
