import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simpeval.corpus import SentencePair
from simpeval.human_eval import (
    AnnotationRecord,
    EvalItem,
    agreement_report,
    assign,
    blinding_from_items,
    cohen_kappa,
    derive_wlt,
    krippendorff_alpha,
    render_summary_table,
    sample_items,
    summarize,
)

from oracles import alpha_oracle


def make_pairs(n=30):
    return [SentencePair(id=f"t{i}", doc_id="d", src=f"source {i}", refs=("r", "r")) for i in range(n)]


def outputs_for(pairs, systems=("sysA", "sysB")):
    return {s: {p.id: f"{s} output for {p.id}" for p in pairs} for s in systems}


# -------------------------------------------------------------- sample_items


def test_sample_items_zero_is_empty():
    pairs = make_pairs()
    assert sample_items(pairs, outputs_for(pairs), 0, seed=1) == []


def test_sample_items_deterministic_blinding_persisted():
    pairs = make_pairs()
    outs = outputs_for(pairs)
    a = sample_items(pairs, outs, 10, seed=42)
    b = sample_items(pairs, outs, 10, seed=42)
    assert [i.to_dict() for i in a] == [i.to_dict() for i in b]
    assert len({i.item_id for i in a}) == 10
    for item in a:
        assert set(item.blinding.values()) == {"sysA", "sysB"}
        for slot in ("A", "B"):
            assert item.outputs[slot] == outs[item.blinding[slot]][item.item_id]
    # both slot orders occur over enough items
    assert len({item.blinding["A"] for item in a}) == 2


def test_sample_items_overdraw_is_error():
    pairs = make_pairs(5)
    with pytest.raises(ValueError, match="cannot sample 6"):
        sample_items(pairs, outputs_for(pairs), 6, seed=0)


def test_sample_items_missing_output_names_id_and_system():
    pairs = make_pairs(3)
    outs = outputs_for(pairs)
    del outs["sysB"]["t1"]
    with pytest.raises(ValueError, match="sysB.*t1"):
        sample_items(pairs, outs, 3, seed=0)


def test_sample_items_requires_exactly_two_systems():
    pairs = make_pairs(3)
    with pytest.raises(ValueError, match="exactly 2"):
        sample_items(pairs, {"only": {p.id: "x" for p in pairs}}, 1, seed=0)


# -------------------------------------------------------------------- assign


def items_of(pairs):
    return [
        EvalItem(
            item_id=p.id,
            source=p.src,
            outputs={"A": "a", "B": "b"},
            blinding={"A": "sysA", "B": "sysB"},
        )
        for p in pairs
    ]


def test_assign_five_items_two_pairs_balances_within_one():
    items = items_of(make_pairs(5))
    plan = assign(items, ["0", "1", "2", "3"], [("0", "1"), ("2", "3")], seed=0)
    per_pair = {}
    for pair in plan.assignments.values():
        per_pair[pair] = per_pair.get(pair, 0) + 1
    assert sorted(per_pair.values()) == [2, 3]
    loads = sorted(plan.load(a) for a in ["0", "1", "2", "3"])
    assert loads == [2, 2, 3, 3]
    assert sum(loads) == 2 * len(items)


def test_assign_rejects_self_pair():
    items = items_of(make_pairs(4))
    with pytest.raises(ValueError, match="distinct"):
        assign(items, ["0", "1"], [("0", "0")], seed=0)


def test_assign_rejects_unknown_annotator():
    items = items_of(make_pairs(4))
    with pytest.raises(ValueError, match="unknown annotator '9'"):
        assign(items, ["0", "1"], [("0", "9")], seed=0)


def test_assign_rejects_unbalanceable_schedule():
    items = items_of(make_pairs(4))
    # annotator 0 sits in both pairs: loads 4/2/2 violate the within-1 rule
    with pytest.raises(ValueError, match="within 1"):
        assign(items, ["0", "1", "2"], [("0", "1"), ("0", "2")], seed=0)


def test_assign_deterministic():
    items = items_of(make_pairs(12))
    schedule = [("0", "1"), ("2", "3")]
    a = assign(items, ["0", "1", "2", "3"], schedule, seed=5)
    b = assign(items, ["0", "1", "2", "3"], schedule, seed=5)
    assert a.to_dict() == b.to_dict()


# ---------------------------------------------------------------- derive_wlt


def item_with(blinding):
    return EvalItem(item_id="i1", source="s", outputs={"A": "a", "B": "b"}, blinding=blinding)


def records_for(scores, annotator="0", item_id="i1"):
    return [
        AnnotationRecord(
            item_id=item_id,
            annotator_id=annotator,
            slot=slot,
            meaning=meaning,
            simplicity=simplicity,
        )
        for slot, (meaning, simplicity) in scores.items()
    ]


def test_derive_wlt_win_lose_tie():
    item = item_with({"A": "sys1", "B": "sys2"})
    win = derive_wlt(records_for({"A": (4, 3), "B": (2, 3)}), item, "0")
    assert win == {"meaning": "win", "simplicity": "tie"}
    lose = derive_wlt(records_for({"A": (2, 1), "B": (5, 4)}), item, "0")
    assert lose == {"meaning": "lose", "simplicity": "lose"}


def test_derive_wlt_uses_canonical_lexicographic_order():
    # sys1 is canonical-first regardless of which slot carries it
    flipped = item_with({"A": "sys2", "B": "sys1"})
    result = derive_wlt(records_for({"A": (5, 5), "B": (1, 1)}), flipped, "0")
    assert result == {"meaning": "lose", "simplicity": "lose"}


def test_derive_wlt_antisymmetric_under_order_swap():
    # renaming systems so their lexicographic order flips must swap win/lose
    item = item_with({"A": "aaa", "B": "zzz"})
    renamed = item_with({"A": "zzz2", "B": "aaa2"})  # same slots, reversed order
    records = records_for({"A": (4, 2), "B": (3, 2)})
    direct = derive_wlt(records, item, "0")
    swapped = derive_wlt(records, renamed, "0")
    flip = {"win": "lose", "lose": "win", "tie": "tie"}
    assert swapped == {k: flip[v] for k, v in direct.items()}


def test_derive_wlt_missing_slot_is_error():
    item = item_with({"A": "sys1", "B": "sys2"})
    with pytest.raises(ValueError, match="no rating"):
        derive_wlt(records_for({"A": (4, 3)}), item, "0")


# --------------------------------------------------------------- cohen kappa


def test_kappa_identical_is_one():
    assert cohen_kappa(["w", "t", "l", "w"], ["w", "t", "l", "w"]) == 1.0
    assert cohen_kappa(["w", "w"], ["w", "w"]) == 1.0  # degenerate marginals


def test_kappa_hand_computed_table():
    a = ["w", "w", "t", "l"]
    b = ["w", "t", "t", "l"]
    assert cohen_kappa(a, b) == pytest.approx(0.6364, abs=1e-4)
    assert cohen_kappa(a, b) == pytest.approx((0.75 - 0.3125) / (1 - 0.3125), abs=1e-12)


def test_kappa_disjoint_choices_negative():
    a = ["w", "t", "l", "w", "t", "l"]
    b = ["t", "l", "w", "l", "w", "t"]
    assert cohen_kappa(a, b) < 0.0


def test_kappa_symmetric():
    rng = random.Random(0)
    for _ in range(20):
        a = [rng.choice("wtl") for _ in range(8)]
        b = [rng.choice("wtl") for _ in range(8)]
        assert cohen_kappa(a, b) == pytest.approx(cohen_kappa(b, a), abs=1e-12)


def test_kappa_length_mismatch_is_error():
    with pytest.raises(ValueError, match="length mismatch"):
        cohen_kappa(["w"], ["w", "t"])


# -------------------------------------------------------- krippendorff alpha


def test_alpha_perfect_agreement_is_one():
    assert krippendorff_alpha([[3, 3], [5, 5], [1, 1]]) == 1.0
    assert krippendorff_alpha([[2, 2, 2], [2, 2, None]]) == 1.0


def test_alpha_two_rater_example_matches_oracle():
    rows = [[1, 1], [2, 2], [3, 3], [3, 4]]
    assert krippendorff_alpha(rows) == pytest.approx(alpha_oracle(rows), abs=1e-9)


def test_alpha_single_disagreeing_unit_matches_oracle():
    rows = [[1, 5]]
    assert krippendorff_alpha(rows) == pytest.approx(alpha_oracle(rows), abs=1e-9)


def test_alpha_no_pairable_unit_is_error():
    with pytest.raises(ValueError, match="two or more"):
        krippendorff_alpha([[1, None], [None, 2]])


def test_alpha_out_of_scale_is_error():
    with pytest.raises(ValueError, match="outside the declared scale"):
        krippendorff_alpha([[1, 9]])


def test_alpha_permutation_invariance():
    rng = random.Random(1)
    rows = [[rng.choice([1, 2, 3, 4, 5, None]) for _ in range(4)] for _ in range(6)]
    rows[0] = [1, 2, None, None]  # ensure at least one pairable unit
    base = krippendorff_alpha(rows)
    shuffled_rows = rows[:]
    rng.shuffle(shuffled_rows)
    assert krippendorff_alpha(shuffled_rows) == pytest.approx(base, abs=1e-12)
    permuted_cols = [[row[i] for i in (2, 0, 3, 1)] for row in rows]
    assert krippendorff_alpha(permuted_cols) == pytest.approx(base, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.lists(st.sampled_from([1, 2, 3, 4, 5, None]), min_size=2, max_size=4),
        min_size=1,
        max_size=6,
    )
)
def test_alpha_matches_oracle_on_random_matrices(rows):
    if not any(sum(v is not None for v in row) >= 2 for row in rows):
        return
    assert krippendorff_alpha(rows) == pytest.approx(alpha_oracle(rows), abs=1e-9)


# ----------------------------------------------------------------- summarize


def test_summarize_means_and_empty():
    items = [
        EvalItem(item_id="i1", source="s", outputs={"A": "x", "B": "y"},
                 blinding={"A": "sysA", "B": "sysB"}),
        EvalItem(item_id="i2", source="s", outputs={"A": "x", "B": "y"},
                 blinding={"A": "sysB", "B": "sysA"}),
    ]
    blinding = blinding_from_items(items)
    records = [
        AnnotationRecord(item_id="i1", annotator_id="0", slot="A", meaning=4, simplicity=2),
        AnnotationRecord(item_id="i1", annotator_id="0", slot="B", meaning=5, simplicity=1),
        AnnotationRecord(item_id="i2", annotator_id="1", slot="B", meaning=3, simplicity=3),
    ]
    summary = summarize(records, blinding)
    assert summary["sysA"]["meaning"] == pytest.approx((4 + 3) / 2)
    assert summary["sysA"]["simplicity"] == pytest.approx((2 + 3) / 2)
    assert summary["sysB"]["meaning"] == 5.0
    assert summarize([], blinding) == {}
    reordered = summarize(list(reversed(records)), blinding)
    assert reordered == summary
    table = render_summary_table(summary)
    assert "Meaning Preservation" in table and "Simplicity" in table
    assert table.index("sysA") < table.index("sysB")


# ---------------------------------------------------------- agreement report


def test_agreement_report_counts_and_exclusions():
    pairs = make_pairs(8)
    items = items_of(pairs)
    plan = assign(items, ["0", "1"], [("0", "1")], seed=0)
    records = []
    for item in items[:6]:  # two items left unrated by annotator 1
        for annotator in ("0", "1"):
            for slot in ("A", "B"):
                records.append(
                    AnnotationRecord(
                        item_id=item.item_id,
                        annotator_id=annotator,
                        slot=slot,
                        meaning=3,
                        simplicity=4,
                    )
                )
    for item in items[6:]:
        for slot in ("A", "B"):
            records.append(
                AnnotationRecord(item_id=item.item_id, annotator_id="0", slot=slot, meaning=2, simplicity=2)
            )
    report = agreement_report(items, plan, records)
    assert len(report) == 2  # one pair x two criteria
    for entry in report:
        assert entry["pair"] == ["0", "1"]
        assert entry["n_items"] == 6
        assert entry["n_excluded"] == 2
        assert entry["kappa"] == 1.0  # all ties, perfectly agreeing
        assert entry["alpha"] == 1.0
