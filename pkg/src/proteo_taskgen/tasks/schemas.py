"""Task identifiers, option sets and JSON Schemas for every target payload."""

from __future__ import annotations

from functools import lru_cache

import jsonschema

from ..constants import AA21, CDR_LOOPS
from ..labels.interactions import SALT_BRIDGE_BINS
from ..labels.pairs import PAIR_BINS
from ..labels.summary import LENGTH_BINS, LONGEST_RUN_BINS, SEGMENT_COUNT_BINS

# Stage I
AS_B1 = "ALIGNMENT_SCHEMA_B1_V2"
AS_B2 = "ALIGNMENT_SCHEMA_B2_V2"
AC_B1 = "ALIGNMENT_CAPTION_B1_V2"
AC_B2 = "ALIGNMENT_CAPTION_B2_V2"
# Stage II
RR = "RESIDUE_RETRIEVAL_V1"
DSSP = "DSSP_SEQ_V1"
RSA = "RSA_SEQ_V1"
CONTACT = "PAIR_CONTACT_YN_V1"
DIST = "PAIR_DIST_BIN_V1"
BATCH = "PAIR_BATCH_V1"
CHAIN = "CHAINPAIR_GRAPH_V1"
TOP = "TOP_CHAINPAIR_V1"
INTF = "INTERFACE_TOPK_V1"
HOT = "HOTSPOT_TOPK_V1"
SALT = "SALTBRIDGE_BIN_V1"
LDDT = "LDDT_BIN_V1"
# Stage III
REDESIGN = "AB_CDR_REDESIGN_SFT_V1"

STAGE1_TASKS = (AS_B1, AS_B2, AC_B1, AC_B2)
STAGE2_TASKS = (RR, DSSP, RSA, CONTACT, DIST, BATCH, CHAIN, TOP, INTF, HOT, SALT, LDDT)
STAGE3_TASKS = (REDESIGN,)
ALL_TASKS = STAGE1_TASKS + STAGE2_TASKS + STAGE3_TASKS
CAPTION_TASKS = (AC_B1, AC_B2)

ABBREVIATIONS = {
    "AS-B1": AS_B1, "AS-B2": AS_B2, "AC-B1": AC_B1, "AC-B2": AC_B2,
    "RR": RR, "DSSP": DSSP, "RSA": RSA, "CONTACT": CONTACT, "DIST": DIST, "BATCH": BATCH,
    "CHAIN": CHAIN, "TOP": TOP, "INTF": INTF, "HOT": HOT, "SALT": SALT, "LDDT": LDDT,
    "REDESIGN": REDESIGN,
}

SS_OPTIONS = ("H", "E", "C", "NA")
RSA_OPTIONS = ("B", "M", "E", "NA")
CONTACT_OPTIONS = ("Contact", "NotContact")
LDDT_BINS = ((0.5, 0.6, 0.7, 0.8), ("<0.5", "0.5-0.6", "0.6-0.7", "0.7-0.8", ">0.8"))
ALL_DIST_BINS = tuple(dict.fromkeys(lab for _, labs in PAIR_BINS.values() for lab in labs))
WINDOW = 5
BATCH_SIZE = 30
INTF_K = 10
HOT_K = 5
FRACTION_LABELS = tuple(f"{10 * k}-{10 * k + 10}" for k in range(10))

_CHAIN_REF = {
    "type": "object",
    "properties": {"chain_i": {"type": "string"}, "chain_j": {"type": "string"}},
    "required": ["chain_i", "chain_j"],
    "additionalProperties": False,
}


def _enum(values) -> dict:
    return {"type": "string", "enum": list(values)}


def _obj(props: dict, required=None, extra=False) -> dict:
    return {
        "type": "object",
        "properties": props,
        "required": list(props) if required is None else list(required),
        "additionalProperties": extra,
    }


def _chain_profile_props() -> dict:
    return {
        "length_bin": _enum(LENGTH_BINS[1]),
        "secondary_structure_fraction_bins": _obj({c: _enum(FRACTION_LABELS) for c in "HEC"}),
        "major_secondary_structure": _enum("HEC"),
        "secondary_structure_longest_run_bins": _obj({c: _enum(LONGEST_RUN_BINS[1]) for c in "HEC"}),
        "secondary_structure_segment_count_bins": _obj({c: _enum(SEGMENT_COUNT_BINS[1]) for c in "HE"}),
    }


def _topk_schema(task: str) -> dict:
    # chain-id keys vary per instance, so they are matched by pattern
    return {
        "type": "object",
        "properties": {"chain_pair": _CHAIN_REF, "topk": {"type": "integer", "minimum": 1}},
        "required": ["chain_pair", "topk"],
        "patternProperties": {
            "^(?!chain_pair$|topk$).+$": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        },
        "additionalProperties": False,
        "minProperties": 3,
        "maxProperties": 4,
    }


_RESIDUE_REF = _obj({"chain": {"type": "string"}, "pos": {"type": "integer", "minimum": 1}})


def _stage3_schema() -> dict:
    ag = {"ag_chain": {"type": "string"}, "ag_pos": {"type": "integer", "minimum": 1}}
    loop_entry = _obj({
        "len": {"type": "integer", "minimum": 1},
        "seq": {"type": "string", "pattern": r"^<[HL]CDR[123]>[A-Z]+</[HL]CDR[123]>$"},
        "filled_positions": {
            "type": "array",
            "items": _obj({"pos": {"type": "integer", "minimum": 1}, "aa": _enum(AA21)}),
        },
    })
    return _obj({
        "task": {"const": REDESIGN},
        "thinking": _obj({
            "design_points": {"type": "array", "items": _obj(ag)},
            "hotspots_where": {"type": "array", "items": _obj({
                **ag, "atomic_contact_count": {"type": "integer", "minimum": 0},
                "delta_sasa_A2": {"type": "number"}, "is_hotspot": {"type": "boolean"}})},
            "shape_context": {"type": "array", "items": _obj({
                **ag, "rsa_label": _enum(("Exposed", "Mid", "Buried", "NA"))})},
            "chemistry_logic": {"type": "array", "items": _obj({
                **ag, "ag_res": _enum(AA21), "ag_charge": {"type": "integer", "minimum": -1, "maximum": 1},
                "interaction_types": {"type": "array", "items": _enum(("Van der Waals", "Hydrogen bond", "Salt bridge"))}})},
            "binder_solution": {"type": "array", "items": _obj({
                **ag, "binder_contacts": {"type": "array", "items": _obj({
                    "ab_chain": {"type": "string"}, "ab_pos": {"type": "integer", "minimum": 1},
                    "cdr": _enum(CDR_LOOPS)})}})},
        }),
        "answer": _obj({
            "cdrs_present": {"type": "array", "items": _enum(CDR_LOOPS), "uniqueItems": True},
            "cdr_sequences": {
                "type": "object",
                "propertyNames": _enum(CDR_LOOPS),
                "additionalProperties": loop_entry,
            },
        }),
    })


@lru_cache(maxsize=None)
def target_schema(task_type: str) -> dict:
    """JSON Schema for ``task_type`` targets (and hence model outputs)."""
    pair_item = _obj({"pair_id": {"type": "string", "pattern": r"^p[0-9]+$"}, "dist_bin": _enum(ALL_DIST_BINS)})
    summary_chain = _obj({"chain_id": {"type": "string"}, **_chain_profile_props()})
    schemas = {
        RR: _obj({"aa": _enum(AA21)}),
        DSSP: _obj({"labels": {"type": "string", "pattern": "^[HEC]{%d}$" % WINDOW}}),
        RSA: _obj({"labels": {"type": "string", "pattern": "^[BME]{%d}$" % WINDOW}}),
        CONTACT: _obj({"choice": _enum(CONTACT_OPTIONS)}),
        DIST: _obj({"dist_bin": _enum(ALL_DIST_BINS)}),
        BATCH: _obj({"pairs": {"type": "array", "items": pair_item}}),
        CHAIN: _obj({"pairs": {"type": "array", "items": _CHAIN_REF}}),
        TOP: _obj({"top_chain_pair": _CHAIN_REF}),
        INTF: _topk_schema(INTF),
        HOT: _topk_schema(HOT),
        SALT: _obj({"salt_bridge_bin": _enum(SALT_BRIDGE_BINS[1])}),
        LDDT: _obj({"lddt_bin": _enum(LDDT_BINS[1])}),
        AS_B1: _obj({
            "task_type": {"const": AS_B1},
            "global": _obj({"num_chains": {"type": "integer", "minimum": 1}}),
            "chains": {"type": "array", "items": summary_chain, "minItems": 1},
        }),
        AS_B2: _obj({
            "task_type": {"const": AS_B2},
            "num_chains": {"type": "integer", "minimum": 1},
            "chain_profile": {"type": "object", "additionalProperties": _obj(_chain_profile_props()),
                              "minProperties": 1},
        }),
        AC_B1: {"type": "string", "minLength": 1},
        AC_B2: {"type": "string", "minLength": 1},
        REDESIGN: _stage3_schema(),
    }
    if task_type not in schemas:
        raise KeyError(f"unknown task type {task_type!r}")
    return schemas[task_type]


@lru_cache(maxsize=None)
def _validator(task_type: str):
    schema = target_schema(task_type)
    cls = jsonschema.validators.validator_for(schema, default=jsonschema.Draft202012Validator)
    return cls(schema)


def validation_errors(task_type: str, payload) -> list[str]:
    """Human-readable schema violations (empty when valid)."""
    return [e.message for e in _validator(task_type).iter_errors(payload)]


def is_valid(task_type: str, payload) -> bool:
    return _validator(task_type).is_valid(payload)
