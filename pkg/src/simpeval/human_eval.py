"""The blinded pairwise human-evaluation protocol and its agreement statistics.

Items pair one source sentence with the outputs of exactly two systems,
shown in seeded-random slot order ("A"/"B"); the slot-to-system blinding is
persisted operator-side and never shown to annotators.  Each annotator rates
both slots of an item on two 5-point Likert criteria (meaning preservation
and simplicity, 1 = strongly disagree .. 5 = strongly agree).

Agreement is reported two ways, mirroring the protocol's tables: Cohen's
kappa over win/lose/tie comparisons derived from each annotator's paired
scores, and Krippendorff's alpha (ordinal) over the raw Likert values.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import SentencePair

CRITERIA = ("meaning", "simplicity")
SLOTS = ("A", "B")
LIKERT_SCALE = (1, 2, 3, 4, 5)

WIN, LOSE, TIE = "win", "lose", "tie"


@dataclass
class EvalItem:
    """One blinded questionnaire row: a source and two anonymized outputs."""

    item_id: str
    source: str
    outputs: dict[str, str]
    blinding: dict[str, str]

    def __post_init__(self) -> None:
        if set(self.outputs) != set(SLOTS) or set(self.blinding) != set(SLOTS):
            raise ValueError(f"item {self.item_id!r} must have exactly slots A and B")
        if len(set(self.blinding.values())) != 2:
            raise ValueError(f"item {self.item_id!r} blinding must map slots to two distinct systems")

    def slot_of(self, system: str) -> str:
        for slot, name in self.blinding.items():
            if name == system:
                return slot
        raise KeyError(system)

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "source": self.source,
            "outputs": dict(self.outputs),
            "blinding": dict(self.blinding),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalItem":
        return cls(
            item_id=data["item_id"],
            source=data["source"],
            outputs=dict(data["outputs"]),
            blinding=dict(data["blinding"]),
        )


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's two Likert ratings for one blinded slot of one item."""

    item_id: str
    annotator_id: str
    slot: str
    meaning: int
    simplicity: int
    timestamp: str = ""

    def __post_init__(self) -> None:
        if self.slot not in SLOTS:
            raise ValueError(f"slot must be one of {SLOTS}, got {self.slot!r}")
        for criterion in CRITERIA:
            value = getattr(self, criterion)
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
                raise ValueError(f"{criterion} must be an integer in 1..5, got {value!r}")

    def key(self) -> tuple[str, str, str]:
        return (self.item_id, self.annotator_id, self.slot)

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "annotator_id": self.annotator_id,
            "slot": self.slot,
            "meaning": self.meaning,
            "simplicity": self.simplicity,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AnnotationRecord":
        return cls(
            item_id=data["item_id"],
            annotator_id=data["annotator_id"],
            slot=data["slot"],
            meaning=int(data["meaning"]),
            simplicity=int(data["simplicity"]),
            timestamp=str(data.get("timestamp", "")),
        )


@dataclass
class AssignmentPlan:
    """Blinded item-to-annotator-pair mapping with persisted randomization."""

    pair_schedule: list[tuple[str, str]]
    assignments: dict[str, tuple[str, str]]
    item_order: list[str]
    seed: int

    def annotators(self) -> list[str]:
        seen: dict[str, None] = {}
        for a, b in self.pair_schedule:
            seen.setdefault(a)
            seen.setdefault(b)
        return list(seen)

    def items_for(self, annotator_id: str) -> list[str]:
        return [i for i in self.item_order if annotator_id in self.assignments[i]]

    def load(self, annotator_id: str) -> int:
        return len(self.items_for(annotator_id))

    def to_dict(self) -> dict:
        return {
            "pair_schedule": [list(p) for p in self.pair_schedule],
            "assignments": {k: list(v) for k, v in self.assignments.items()},
            "item_order": list(self.item_order),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AssignmentPlan":
        return cls(
            pair_schedule=[tuple(p) for p in data["pair_schedule"]],
            assignments={k: tuple(v) for k, v in data["assignments"].items()},
            item_order=list(data["item_order"]),
            seed=int(data["seed"]),
        )


def sample_items(
    test_pairs: Sequence[SentencePair],
    system_outputs: Mapping[str, Mapping[str, str]],
    n: int,
    seed: int,
) -> list[EvalItem]:
    """Sample ``n`` test sentences uniformly without replacement and blind the
    two systems' outputs into per-item randomized slots."""
    systems = sorted(system_outputs)
    if len(systems) != 2:
        raise ValueError(f"exactly 2 systems are required, got {len(systems)}")
    ids = [p.id for p in test_pairs]
    if n > len(ids):
        raise ValueError(f"cannot sample {n} items from {len(ids)} test sentences")
    by_id = {p.id: p for p in test_pairs}
    rng = random.Random(seed)
    chosen = rng.sample(ids, n)
    items = []
    for pair_id in chosen:
        if rng.random() < 0.5:
            blinding = {"A": systems[0], "B": systems[1]}
        else:
            blinding = {"A": systems[1], "B": systems[0]}
        outputs = {}
        for slot, system in blinding.items():
            text = system_outputs[system].get(pair_id)
            if text is None:
                raise ValueError(f"system {system!r} has no output for id {pair_id!r}")
            outputs[slot] = text
        items.append(
            EvalItem(item_id=pair_id, source=by_id[pair_id].src, outputs=outputs, blinding=blinding)
        )
    return items


def assign(
    items: Sequence[EvalItem],
    annotators: Sequence[str],
    pair_schedule: Sequence[tuple[str, str]],
    seed: int,
) -> AssignmentPlan:
    """Deal seed-shuffled items round-robin to the annotator pairs in
    ``pair_schedule``; every item is rated by exactly the two annotators of
    its pair, and pairs outside the schedule never co-rate anything."""
    if not pair_schedule:
        raise ValueError("pair schedule must be non-empty")
    known = set(annotators)
    if len(known) != len(annotators):
        raise ValueError("annotator ids must be unique")
    for a, b in pair_schedule:
        if a == b:
            raise ValueError(f"a pair must be two distinct annotators, got ({a}, {b})")
        for annotator in (a, b):
            if annotator not in known:
                raise ValueError(f"schedule references unknown annotator {annotator!r}")

    order = [item.item_id for item in items]
    random.Random(seed).shuffle(order)
    assignments = {
        item_id: tuple(pair_schedule[i % len(pair_schedule)]) for i, item_id in enumerate(order)
    }
    plan = AssignmentPlan(
        pair_schedule=[tuple(p) for p in pair_schedule],
        assignments=assignments,
        item_order=order,
        seed=seed,
    )
    loads = [plan.load(a) for a in annotators]
    if loads and max(loads) - min(loads) > 1:
        raise ValueError(
            "round-robin dealing cannot balance annotator loads within 1 item for "
            f"this schedule and item count (loads: {dict(zip(annotators, loads))}); "
            "use an item count divisible by the schedule length"
        )
    return plan


def index_records(records: Sequence[AnnotationRecord]) -> dict[tuple[str, str, str], AnnotationRecord]:
    index: dict[tuple[str, str, str], AnnotationRecord] = {}
    for record in records:
        if record.key() in index:
            raise ValueError(f"duplicate rating for {record.key()}")
        index[record.key()] = record
    return index


def canonical_system_order(blinding: Mapping[str, str]) -> tuple[str, str]:
    """Lexicographic system order; 'win' always refers to the first system."""
    first, second = sorted(blinding.values())
    return first, second


def derive_wlt(
    records: Sequence[AnnotationRecord] | Mapping[tuple[str, str, str], AnnotationRecord],
    item: EvalItem,
    annotator_id: str,
) -> dict[str, str]:
    """Turn one annotator's paired scores for an item into win/lose/tie per
    criterion, from the perspective of the canonical-first system."""
    index = records if isinstance(records, Mapping) else index_records(records)
    first, second = canonical_system_order(item.blinding)
    scores = {}
    for system in (first, second):
        record = index.get((item.item_id, annotator_id, item.slot_of(system)))
        if record is None:
            raise ValueError(
                f"annotator {annotator_id!r} has no rating for item {item.item_id!r} "
                f"slot {item.slot_of(system)!r}"
            )
        scores[system] = record
    out = {}
    for criterion in CRITERIA:
        a = getattr(scores[first], criterion)
        b = getattr(scores[second], criterion)
        out[criterion] = WIN if a > b else LOSE if a < b else TIE
    return out


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Unweighted Cohen's kappa with expected agreement from the product of
    marginal proportions; perfect observed agreement returns 1.0 even when
    the marginals are degenerate."""
    if len(labels_a) != len(labels_b):
        raise ValueError(f"length mismatch: {len(labels_a)} vs {len(labels_b)}")
    if not labels_a:
        raise ValueError("label sequences must be non-empty")
    n = len(labels_a)
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    if observed == 1.0:
        return 1.0
    categories = set(labels_a) | set(labels_b)
    expected = sum(
        (sum(1 for a in labels_a if a == c) / n) * (sum(1 for b in labels_b if b == c) / n)
        for c in categories
    )
    return (observed - expected) / (1.0 - expected)


def krippendorff_alpha(
    ratings: Sequence[Sequence[Optional[int]]],
    categories: Sequence[int] = LIKERT_SCALE,
) -> float:
    """Krippendorff's alpha with the ordinal difference function, via the
    coincidence-matrix formulation.

    ``ratings`` rows are units, columns raters; ``None`` marks a missing
    cell.  Units with fewer than two ratings contribute no coincidences.
    The ordinal distance between categories c <= k is
    ``(sum of value marginals n_g for g = c..k - (n_c + n_k) / 2) ** 2``.
    """
    cats = list(categories)
    index = {c: i for i, c in enumerate(cats)}
    units = []
    for row in ratings:
        values = [v for v in row if v is not None]
        for v in values:
            if v not in index:
                raise ValueError(f"rating {v!r} outside the declared scale {cats}")
        if len(values) >= 2:
            units.append(values)
    if not units:
        raise ValueError("no unit has two or more ratings")

    size = len(cats)
    coincidence = np.zeros((size, size))
    for values in units:
        weight = 1.0 / (len(values) - 1)
        for i, a in enumerate(values):
            for j, b in enumerate(values):
                if i != j:
                    coincidence[index[a], index[b]] += weight
    marginals = coincidence.sum(axis=1)
    total = marginals.sum()

    cumulative = np.concatenate(([0.0], np.cumsum(marginals)))
    delta_sq = np.zeros((size, size))
    for c in range(size):
        for k in range(c + 1, size):
            span = cumulative[k + 1] - cumulative[c]
            delta = span - (marginals[c] + marginals[k]) / 2.0
            delta_sq[c, k] = delta_sq[k, c] = delta * delta

    observed = float((coincidence * delta_sq).sum())
    expected = float((np.outer(marginals, marginals) * delta_sq).sum()) / (total - 1.0)
    if expected == 0.0:
        return 1.0
    return 1.0 - observed / expected


def summarize(
    records: Sequence[AnnotationRecord], blinding: Mapping[str, Mapping[str, str]]
) -> dict[str, dict[str, float]]:
    """Unblinded per-system mean scores per criterion on the 1..5 scale."""
    sums: dict[str, dict[str, float]] = {}
    counts: dict[str, int] = {}
    for record in records:
        item_blinding = blinding.get(record.item_id)
        if item_blinding is None:
            raise ValueError(f"no blinding known for item {record.item_id!r}")
        system = item_blinding[record.slot]
        bucket = sums.setdefault(system, {c: 0.0 for c in CRITERIA})
        for criterion in CRITERIA:
            bucket[criterion] += getattr(record, criterion)
        counts[system] = counts.get(system, 0) + 1
    return {
        system: {criterion: sums[system][criterion] / counts[system] for criterion in CRITERIA}
        | {"n_ratings": counts[system]}
        for system in sorted(sums)
    }


def render_summary_table(summary: Mapping[str, Mapping[str, float]]) -> str:
    """Plain-text table, rows = systems, columns = the two criteria."""
    header = f"{'Model':<28} {'Meaning Preservation':>22} {'Simplicity':>12}"
    lines = [header, "-" * len(header)]
    for system, scores in summary.items():
        lines.append(f"{system:<28} {scores['meaning']:>22.3f} {scores['simplicity']:>12.3f}")
    return "\n".join(lines)


def blinding_from_items(items: Sequence[EvalItem]) -> dict[str, dict[str, str]]:
    return {item.item_id: dict(item.blinding) for item in items}


def agreement_report(
    items: Sequence[EvalItem],
    plan: AssignmentPlan,
    records: Sequence[AnnotationRecord],
) -> list[dict]:
    """Kappa/alpha per scheduled annotator pair per criterion.

    Only items both annotators completed (all four slot ratings) count;
    exclusions are reported, never silently dropped.  Pairs with no usable
    items get null statistics.
    """
    by_id = {item.item_id: item for item in items}
    index = index_records(records)
    report = []
    for a, b in plan.pair_schedule:
        assigned = [i for i in plan.item_order if plan.assignments[i] == (a, b)]
        complete = [
            item_id
            for item_id in assigned
            if all((item_id, ann, slot) in index for ann in (a, b) for slot in SLOTS)
        ]
        for criterion in CRITERIA:
            entry: dict = {
                "pair": [a, b],
                "criterion": criterion,
                "n_items": len(complete),
                "n_excluded": len(assigned) - len(complete),
            }
            if complete:
                labels_a = [derive_wlt(index, by_id[i], a)[criterion] for i in complete]
                labels_b = [derive_wlt(index, by_id[i], b)[criterion] for i in complete]
                entry["kappa"] = cohen_kappa(labels_a, labels_b)
                rows = [
                    [
                        getattr(index[(item_id, a, slot)], criterion),
                        getattr(index[(item_id, b, slot)], criterion),
                    ]
                    for item_id in complete
                    for slot in SLOTS
                ]
                entry["alpha"] = krippendorff_alpha(rows)
            else:
                entry["kappa"] = None
                entry["alpha"] = None
            report.append(entry)
    return report


def load_items(path: str) -> list[EvalItem]:
    with open(path, encoding="utf-8") as fh:
        return [EvalItem.from_dict(json.loads(line)) for line in fh if line.strip()]


def save_items(items: Sequence[EvalItem], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in items:
            fh.write(json.dumps(item.to_dict(), ensure_ascii=False) + "\n")


def load_records(path: str) -> list[AnnotationRecord]:
    with open(path, encoding="utf-8") as fh:
        records = [AnnotationRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
    index_records(records)  # uniqueness check
    return records


def save_records(records: Sequence[AnnotationRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
