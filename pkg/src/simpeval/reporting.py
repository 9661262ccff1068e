"""Run-level evaluation reports, learning curves, and model selection."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .corpus import SentencePair, TokenEmbeddings, load_embeddings, ref_parse_id
from .metrics import (
    METRIC_COLUMNS,
    TABLE_HEADERS,
    MetricReport,
    bleu,
    embedding_f,
    rouge,
    sari,
)

logger = logging.getLogger(__name__)


@dataclass
class EvalConfig:
    """Which metrics to compute and where the embedding sidecars live.

    Embedding similarity needs sidecar vectors for hypotheses (keyed by pair
    id) and references (keyed by ``<pair_id>::ref<j>``); it is enabled only
    when both paths are given.
    """

    metrics: tuple[str, ...] = ("bleu", "rouge1", "rouge2", "rougeL", "sari")
    hyp_embeddings_path: Optional[str] = None
    ref_embeddings_path: Optional[str] = None

    def enabled_metrics(self) -> tuple[str, ...]:
        enabled = tuple(self.metrics)
        if self.hyp_embeddings_path and self.ref_embeddings_path:
            if "embedding_f" not in enabled:
                enabled = enabled + ("embedding_f",)
        return enabled


def load_predictions(path: str) -> dict[str, str]:
    """Read a predictions file: JSON Lines of ``{"id", "hyp"}``."""
    predictions: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "id" not in record or "hyp" not in record:
                raise ValueError(f"{path}:{lineno}: prediction records need 'id' and 'hyp'")
            if record["id"] in predictions:
                raise ValueError(f"{path}:{lineno}: duplicate prediction for id {record['id']!r}")
            predictions[record["id"]] = record["hyp"]
    return predictions


def save_predictions(predictions: Mapping[str, str], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair_id, hyp in predictions.items():
            fh.write(json.dumps({"id": pair_id, "hyp": hyp}, ensure_ascii=False) + "\n")


def evaluate_run(
    predictions_path: str,
    split: Sequence[SentencePair],
    config: EvalConfig,
    system_name: str = "system",
) -> MetricReport:
    """Score one system's predictions against a split with every enabled metric."""
    predictions = load_predictions(predictions_path)
    split_ids = [p.id for p in split]
    missing = [i for i in split_ids if i not in predictions]
    if missing:
        raise ValueError(
            f"predictions missing for {len(missing)} split ids, e.g. {missing[:20]}"
        )
    extra = sorted(set(predictions) - set(split_ids))
    if extra:
        logger.warning("ignoring %d predictions outside the split, e.g. %s", len(extra), extra[:5])

    enabled = config.enabled_metrics()
    hyp_embs: dict[str, TokenEmbeddings] = {}
    ref_embs: dict[str, TokenEmbeddings] = {}
    if "embedding_f" in enabled:
        hyp_embs = load_embeddings(config.hyp_embeddings_path)
        ref_embs = load_embeddings(config.ref_embeddings_path)

    per_sentence: dict[str, dict[str, float]] = {}
    for pair in split:
        hyp = predictions[pair.id]
        refs = list(pair.refs)
        scores: dict[str, float] = {}
        if "bleu" in enabled:
            scores["bleu"] = bleu({pair.id: hyp}, {pair.id: refs})
        for variant in ("1", "2", "L"):
            key = f"rouge{variant}"
            if key in enabled:
                scores[key] = rouge(hyp, refs, variant)
        if "sari" in enabled:
            scores["sari"] = sari(pair.src, hyp, refs)
        if "embedding_f" in enabled:
            if pair.id not in hyp_embs:
                raise ValueError(f"no hypothesis embeddings for id {pair.id!r}")
            ref_keys = [ref_parse_id(pair.id, j) for j in range(len(refs))]
            for key in ref_keys:
                if key not in ref_embs:
                    raise ValueError(f"no reference embeddings for id {key!r}")
            _, _, f_score = embedding_f(hyp_embs[pair.id], [ref_embs[k] for k in ref_keys])
            scores["embedding_f"] = f_score
        per_sentence[pair.id] = scores

    corpus_scores: dict[str, float] = {}
    if "bleu" in enabled:
        corpus_scores["bleu"] = bleu(
            {p.id: predictions[p.id] for p in split}, {p.id: list(p.refs) for p in split}
        )
    for key in ("rouge1", "rouge2", "rougeL", "sari", "embedding_f"):
        if key in enabled:
            corpus_scores[key] = sum(s[key] for s in per_sentence.values()) / len(per_sentence)
    return MetricReport(
        system_name=system_name,
        corpus_scores=corpus_scores,
        per_sentence=per_sentence,
        n_sentences=len(split),
    )


def render_metric_table(reports: Sequence[MetricReport]) -> str:
    """Plain-text score table in the fixed column order."""
    name_width = max([len("Models")] + [len(r.system_name) for r in reports])
    header = f"{'Models':<{name_width}}"
    for key in METRIC_COLUMNS:
        header += f" {TABLE_HEADERS[key]:>12}"
    lines = [header, "-" * len(header)]
    for report in reports:
        row = f"{report.system_name:<{name_width}}"
        for key in METRIC_COLUMNS:
            value = report.corpus_scores.get(key)
            row += f" {value:>12.2f}" if value is not None else f" {'-':>12}"
        lines.append(row)
    return "\n".join(lines)


@dataclass
class RunRecord:
    """One point on a learning curve: a system at one training epoch."""

    system_name: str
    epoch: int
    predictions_path: str
    report: MetricReport


def learning_curve(run_records: Sequence[RunRecord]) -> dict[str, dict[str, list[tuple[int, float]]]]:
    """Epoch-sorted per-system, per-metric series, ready to tabulate or plot."""
    seen: set[tuple[str, int]] = set()
    for record in run_records:
        key = (record.system_name, record.epoch)
        if key in seen:
            raise ValueError(f"duplicate run record for system {key[0]!r} epoch {key[1]}")
        seen.add(key)
    curves: dict[str, dict[str, list[tuple[int, float]]]] = {}
    for record in sorted(run_records, key=lambda r: (r.system_name, r.epoch)):
        system_curves = curves.setdefault(record.system_name, {})
        for metric, value in record.report.corpus_scores.items():
            system_curves.setdefault(metric, []).append((record.epoch, value))
    return curves


def curve_to_dict(curves: Mapping[str, Mapping[str, list[tuple[int, float]]]], split_name: str) -> dict:
    return {
        "split": split_name,
        "systems": {
            system: {
                metric: [{"epoch": e, "value": v} for e, v in series]
                for metric, series in metrics.items()
            }
            for system, metrics in curves.items()
        },
    }


def plot_curves(
    curves: Mapping[str, Mapping[str, list[tuple[int, float]]]],
    path: str,
    metrics: Sequence[str] = ("sari", "embedding_f"),
) -> None:
    """Write a simple line chart per metric (static file, not interactive)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    present = [m for m in metrics if any(m in sys_curves for sys_curves in curves.values())]
    if not present:
        raise ValueError(f"none of {metrics} appear in the curves")
    fig, axes = plt.subplots(1, len(present), figsize=(6 * len(present), 4), squeeze=False)
    for ax, metric in zip(axes[0], present):
        for system, sys_curves in curves.items():
            if metric in sys_curves:
                epochs, values = zip(*sys_curves[metric])
                ax.plot(epochs, values, marker="o", label=system)
        ax.set_xlabel("epoch")
        ax.set_ylabel(TABLE_HEADERS.get(metric, metric))
        ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _argmax_system(reports: Sequence[MetricReport], metric: str) -> Optional[str]:
    best_name = None
    best_score = None
    for report in sorted(reports, key=lambda r: r.system_name):
        score = report.corpus_scores.get(metric)
        if score is None:
            continue
        if best_score is None or score > best_score:
            best_name, best_score = report.system_name, score
    return best_name


def select_models(reports: Sequence[MetricReport]) -> set[str]:
    """The (at most two) systems maximizing SARI and embedding F respectively;
    ties break to the lexicographically first system name."""
    if not reports:
        raise ValueError("at least one report is required")
    selected = set()
    for metric in ("sari", "embedding_f"):
        winner = _argmax_system(reports, metric)
        if winner is not None:
            selected.add(winner)
    return selected
