import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from proteo_taskgen import compute_labels
from proteo_taskgen.errors import EmptyBufferWithReplay, TaskNotApplicable
from proteo_taskgen.tasks import schemas as S
from proteo_taskgen.tasks.base import TaskInstance, instance_seed
from proteo_taskgen.tasks.corpus import GenerationSettings, generate_for_structure
from proteo_taskgen.tasks.curriculum import (DEFAULT_PHASES, CurriculumPhase, ReplayBuffer, category_counts,
                                             run_curriculum, sample_curriculum)
from proteo_taskgen.tasks.stage1 import caption_b1, gen_stage1, normalized_schema, parse_caption_b1
from proteo_taskgen.tasks.stage2 import batch_quotas, gen_stage2, lddt_bin
from proteo_taskgen.tasks.stage3 import gen_stage3
from proteo_taskgen.synthetic import helix_bundle


@pytest.fixture(scope="module")
def corpus(antibody, antibody_labels, antibody_doc):
    out = {}
    for stage in (1, 2, 3):
        insts, _ = generate_for_structure(antibody[0], GenerationSettings(stage, global_seed=7, default_count=3),
                                          antibody_doc, antibody_labels)
        out[stage] = insts
    return out


def test_every_target_validates(corpus):
    seen = set()
    for insts in corpus.values():
        for inst in insts:
            assert S.validation_errors(inst.task_type, inst.target) == [], inst.task_type
            assert inst.prompt["text"].startswith(f"<TASK={inst.task_type}>")
            seen.add(inst.task_type)
    assert seen == set(S.ALL_TASKS)


def test_record_round_trip(corpus):
    for inst in corpus[2]:
        line = inst.to_json()
        assert list(json.loads(line)) == ["task_type", "structure_id", "seed", "prompt", "target", "ordinal"]
        assert TaskInstance.from_json(line) == inst


def test_generation_is_deterministic(antibody, antibody_doc):
    cx = antibody[0]
    s = GenerationSettings(2, global_seed=11, default_count=2)
    a = [i.to_json() for i in generate_for_structure(cx, s, antibody_doc)[0]]
    b = [i.to_json() for i in generate_for_structure(cx, s, antibody_doc)[0]]
    assert a == b
    c = [i.to_json() for i in generate_for_structure(cx, GenerationSettings(2, global_seed=12, default_count=2),
                                                     antibody_doc)[0]]
    assert a != c


def test_skipped_slots_keep_ordinals(bundle):
    single = bundle.subset(["A"])
    insts, skipped = generate_for_structure(single, GenerationSettings(2, global_seed=3))
    assert skipped == {S.CHAIN: 1, S.TOP: 1, S.INTF: 1, S.HOT: 1, S.SALT: 1, S.LDDT: 1}
    by_type = {i.task_type: i.ordinal for i in insts}
    assert by_type == {t: k + 1 for k, t in enumerate(S.STAGE2_TASKS) if t in by_type}


def test_seed_depends_on_every_part():
    base = instance_seed(0, "X", "T", 1)
    assert len({base, instance_seed(1, "X", "T", 1), instance_seed(0, "Y", "T", 1),
                instance_seed(0, "X", "U", 1), instance_seed(0, "X", "T", 2)}) == 5
    assert 0 <= base < 2 ** 63


def test_rr_target_matches_structure(corpus, antibody):
    cx = antibody[0]
    for inst in corpus[2]:
        if inst.task_type == S.RR:
            q = inst.prompt["query"]
            assert inst.target == {"aa": cx.residue(q["chain"], q["pos"]).aa}


def test_dssp_and_rsa_windows(corpus, antibody_labels):
    for inst in corpus[2]:
        if inst.task_type in (S.DSSP, S.RSA):
            q = inst.prompt["query"]
            get = antibody_labels.ss3_of if inst.task_type == S.DSSP else antibody_labels.rsa_of
            want = "".join(get((q["chain"], p)) for p in range(q["start"], q["end"] + 1))
            assert q["end"] - q["start"] == 4
            assert inst.target == {"labels": want}


def test_pair_targets(corpus, antibody_labels):
    for inst in corpus[2]:
        q = inst.prompt["query"]
        if inst.task_type == S.DIST:
            g = antibody_labels.pair((q["i"]["chain"], q["i"]["pos"]), (q["j"]["chain"], q["j"]["pos"]))
            assert inst.target == {"dist_bin": g.dist_bin} and q["pair_class"] == g.pair_class
        elif inst.task_type == S.CONTACT:
            g = antibody_labels.pair((q["i"]["chain"], q["i"]["pos"]), (q["j"]["chain"], q["j"]["pos"]))
            assert inst.target == {"choice": "Contact" if g.contact else "NotContact"}


def test_batch_quota_and_uniqueness(corpus):
    for inst in corpus[2]:
        if inst.task_type == S.BATCH:
            ids = [(p["i"]["chain"], p["i"]["pos"], p["j"]["chain"], p["j"]["pos"])
                   for p in json.loads(inst.prompt["text"].split("\n", 2)[2])["pairs"]]
            assert len(ids) == len(set(ids)) == S.BATCH_SIZE


def test_batch_quotas_redistribute():
    assert batch_quotas({"short": 100, "long": 100, "cross_chain": 100}) == {"short": 15, "long": 8, "cross_chain": 7}
    q = batch_quotas({"short": 100, "long": 100, "cross_chain": 0})
    assert q["cross_chain"] == 0 and sum(q.values()) == 30


def test_single_chain_pair_tasks_not_applicable(bundle):
    single = bundle.subset(["A"])
    labels = compute_labels(single)
    for task in (S.CHAIN, S.TOP, S.INTF, S.HOT, S.SALT):
        with pytest.raises(TaskNotApplicable):
            gen_stage2(single, labels, task, 1)
    with pytest.raises(TaskNotApplicable):
        gen_stage2(single, labels, S.LDDT, 1)


@pytest.mark.parametrize("value,label", [(0.0, "<0.5"), (0.5, "0.5-0.6"), (0.74, "0.7-0.8"), (0.8, ">0.8")])
def test_lddt_bins(value, label):
    assert lddt_bin(value) == label


def test_stage1_single_chain_caption(bundle):
    single = bundle.subset(["A"])
    labels = compute_labels(single)
    text = caption_b1(single, labels)
    assert "single chain (Chain A)" in text
    assert "about 0-50 residues long" in text
    assert parse_caption_b1(text) == normalized_schema(S.AS_B1, gen_stage1(single, labels, S.AS_B1, 0).target)


def test_stage3_hotspots_and_empty(antibody, antibody_labels, antibody_doc):
    cx = antibody[0]
    hs = [("A", 30), ("A", 12), ("A", 20)]
    inst = gen_stage3(cx, antibody_labels, antibody_doc.cdrs, hs, 1)
    dp = inst.target["thinking"]["design_points"]
    assert json.dumps(dp).count('"A"') >= 3
    for c, p in hs:
        assert f"[{c},{p}]" in inst.prompt["text"]
    empty = gen_stage3(cx, antibody_labels, antibody_doc.cdrs, [], 1)
    assert empty.target["thinking"]["hotspots_where"] == []
    assert empty.target["answer"]["cdrs_present"] == ["H1", "H2", "H3", "L1", "L2", "L3"]


def test_stage3_filled_positions_are_contacts(antibody, antibody_labels, antibody_doc):
    cx = antibody[0]
    inst = gen_stage3(cx, antibody_labels, antibody_doc.cdrs, [], 1)
    for loop, (chain, start, end) in antibody_doc.cdrs.ordered():
        rec = inst.target["answer"]["cdr_sequences"][loop]
        assert rec["len"] == end - start + 1
        body = rec["seq"][len(f"<{loop[0]}CDR{loop[1]}>"):-len(f"</{loop[0]}CDR{loop[1]}>")]
        assert len(body) == rec["len"]
        for fp in rec["filled_positions"]:
            assert body[fp["pos"] - 1] == fp["aa"] == cx.residue(chain, start + fp["pos"] - 1).aa
        assert body.count("X") == rec["len"] - len(rec["filled_positions"])


# -- curriculum ------------------------------------------------------------------

def fake_pool(tasks, n=5):
    return {t: [TaskInstance(t, f"S{k}", k, {"text": "", "query": {}}, {}, k) for k in range(n)] for t in tasks}


def test_phase_validation():
    with pytest.raises(ValueError):
        CurriculumPhase("M0", 10, {S.RR: 0.5})
    with pytest.raises(ValueError):
        CurriculumPhase("M9", 10, {S.RR: 1.0})
    with pytest.raises(ValueError):
        CurriculumPhase("M0", 10, {"NOPE": 1.0})


def test_single_task_phase():
    ph = CurriculumPhase("M0", 10, {S.RR: 1.0})
    out = sample_curriculum(ph, None, 200, 1, fake_pool([S.RR]))
    assert len(out) == 200 and {i.task_type for i in out} == {S.RR}


def test_same_seed_same_sequence():
    ph = DEFAULT_PHASES["M0"]
    pool = fake_pool(S.STAGE2_TASKS)
    a = [i.to_json() for i in sample_curriculum(ph, None, 500, 9, pool)]
    b = [i.to_json() for i in sample_curriculum(ph, None, 500, 9, pool)]
    assert a == b


def test_replay_requires_buffer():
    pool = fake_pool(S.STAGE2_TASKS)
    with pytest.raises(EmptyBufferWithReplay):
        sample_curriculum(DEFAULT_PHASES["M1"], ReplayBuffer(10), 10, 0, pool)
    with pytest.raises(EmptyBufferWithReplay):
        sample_curriculum(DEFAULT_PHASES["M1"], None, 10, 0, pool)


def test_replay_only_from_earlier_phases():
    buf = ReplayBuffer(100, seed=1)
    pool = fake_pool(S.STAGE2_TASKS)
    buf.extend(pool[S.DSSP], "M1")
    assert buf.eligible("M1", S.DSSP) == []
    assert len(buf.eligible("M2", S.DSSP)) == 5


def test_reservoir_capacity_and_uniformity():
    counts = np.zeros(100)
    for seed in range(300):
        buf = ReplayBuffer(10, seed=seed)
        for k in range(100):
            buf.add(TaskInstance(S.RR, "S", k, {}, {}, k), "M0")
        assert len(buf) == 10
        for inst in buf.entries:
            counts[inst.ordinal] += 1
    # each item kept with probability 0.1 -> 30 expected per item
    assert counts.sum() == 3000
    assert counts[:50].sum() == pytest.approx(1500, rel=0.1)


def test_run_curriculum_feeds_buffer():
    pool = fake_pool(S.STAGE2_TASKS)
    out = run_curriculum([DEFAULT_PHASES[p] for p in ("M0", "M1")], pool, {"M0": 400, "M1": 400}, 5)
    assert all(src == "new" for src, _ in out["M0"])
    replay = [i for src, i in out["M1"] if src == "replay"]
    assert replay and {i.task_type for i in replay} <= {S.DSSP, S.RSA}


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(sorted(DEFAULT_PHASES)), st.integers(0, 2 ** 32 - 1))
def test_category_counts_sum(phase, seed):
    counts = category_counts(DEFAULT_PHASES[phase], 1000, seed)
    assert sum(counts.values()) == 1000
