"""Inference-time control-token optimization.

DTD, WR, and LV get one static value each, found by exhaustively scoring a
discrete grid on the validation split (the grid is small enough that an
evolutionary searcher would only add nondeterminism).  LR is predicted per
sentence by a ridge-regression model over source-side features.

Generators are abstract: the toolkit never embeds a neural model.  Three
bindings are provided -- an in-process callable, an external command fed
one annotated source per stdin line, and an HTTP endpoint.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np
import requests

from .control_tokens import (
    CtVector,
    annotate,
    is_quantized,
    lexical_complexity,
    quantize,
)
from .corpus import DepParse, RankTable, SentencePair, tokenize
from .metrics import corpus_sari

LR_FEATURE_NAMES = ("intercept", "char_length", "token_count", "mean_log_rank", "parse_depth")


class Generator(Protocol):
    """Maps annotated source strings to one output each, order-preserving."""

    concurrent_safe: bool

    def generate(self, inputs: Sequence[str]) -> list[str]: ...


class MockGenerator:
    """In-process generator for tests and dry runs."""

    concurrent_safe = True

    def __init__(self, fn: Callable[[str], str]):
        self._fn = fn

    def generate(self, inputs: Sequence[str]) -> list[str]:
        return [self._fn(text) for text in inputs]


class CommandGenerator:
    """Pipes annotated sources (one per line) through an external command."""

    concurrent_safe = False

    def __init__(self, argv: Sequence[str]):
        self.argv = list(argv)

    def generate(self, inputs: Sequence[str]) -> list[str]:
        for text in inputs:
            if "\n" in text:
                raise ValueError("command generator inputs must be single-line")
        proc = subprocess.run(
            self.argv,
            input="".join(text + "\n" for text in inputs),
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            raise RuntimeError(
                f"generator command {self.argv} exited with {proc.returncode}: {proc.stderr.strip()}"
            )
        return proc.stdout.splitlines()


class HttpGenerator:
    """POSTs ``{"inputs": [...]}`` to ``<base_url>/generate``."""

    concurrent_safe = False

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def generate(self, inputs: Sequence[str]) -> list[str]:
        response = requests.post(
            f"{self.base_url}/generate", json={"inputs": list(inputs)}, timeout=self.timeout
        )
        response.raise_for_status()
        return list(response.json()["outputs"])


def run_generator(gen: Generator, inputs: Sequence[str]) -> list[str]:
    outputs = gen.generate(inputs)
    if len(outputs) != len(inputs):
        raise RuntimeError(f"generator returned {len(outputs)} outputs for {len(inputs)} inputs")
    return outputs


@dataclass(frozen=True)
class CtGrid:
    """Candidate value lists for the three statically-set attributes."""

    dtd: tuple[float, ...]
    wr: tuple[float, ...]
    lv: tuple[float, ...]

    def validate(self) -> None:
        for name, values in (("dtd", self.dtd), ("wr", self.wr), ("lv", self.lv)):
            if not values:
                raise ValueError(f"empty grid for {name}")
            for v in values:
                if not is_quantized(v):
                    raise ValueError(f"grid value {v!r} for {name} is not on the quantized grid")

    def points(self) -> list[tuple[float, float, float]]:
        return [
            (d, w, l)
            for d in sorted(self.dtd)
            for w in sorted(self.wr)
            for l in sorted(self.lv)
        ]


@dataclass
class GridSearchResult:
    best: CtVector
    best_sari: float
    table: list[tuple[tuple[float, float, float], float]]

    def to_dict(self) -> dict:
        return {
            "selected": {"dtd": self.best.dtd, "wr": self.best.wr, "lv": self.best.lv},
            "best_sari": self.best_sari,
            "points": [
                {"dtd": d, "wr": w, "lv": l, "sari": score}
                for (d, w, l), score in self.table
            ],
        }


def grid_search(
    gen: Generator,
    val_pairs: Sequence[SentencePair],
    grid: CtGrid,
    fixed_lr_policy: Callable[[SentencePair], float] | float,
) -> GridSearchResult:
    """Exhaustively score every (dtd, wr, lv) grid point by corpus SARI on
    the validation pairs; ties go to the lexicographically smallest point."""
    grid.validate()
    if not val_pairs:
        raise ValueError("no validation pairs")
    for pair in val_pairs:
        if not pair.is_multi_ref():
            raise ValueError(f"validation pair {pair.id!r} is not multi-reference")

    if callable(fixed_lr_policy):
        lr_values = {p.id: fixed_lr_policy(p) for p in val_pairs}
    else:
        lr_values = {p.id: float(fixed_lr_policy) for p in val_pairs}
    for pair_id, lr in lr_values.items():
        if not is_quantized(lr):
            raise ValueError(f"LR policy produced unquantized value {lr!r} for {pair_id!r}")

    sources = {p.id: p.src for p in val_pairs}
    references = {p.id: list(p.refs) for p in val_pairs}
    table = []
    best_point = None
    best_sari = -1.0
    for point in grid.points():
        d, w, l = point
        annotated = [
            annotate(p.src, CtVector(dtd=d, wr=w, lv=l, lr=lr_values[p.id])) for p in val_pairs
        ]
        outputs = run_generator(gen, annotated)
        hypotheses = {p.id: out for p, out in zip(val_pairs, outputs)}
        score = corpus_sari(sources, hypotheses, references)
        table.append((point, score))
        if score > best_sari:
            best_point, best_sari = point, score
    assert best_point is not None
    # LR is not part of the static optimum; report the grid point with a
    # placeholder LR of 1.0 so the vector stays well-formed.
    best = CtVector(dtd=best_point[0], wr=best_point[1], lv=best_point[2], lr=1.0)
    return GridSearchResult(best=best, best_sari=best_sari, table=table)


@dataclass(frozen=True)
class LrPredictor:
    """Linear model over (intercept, char length, token count, mean log rank,
    parse depth) predicting the raw length-ratio target."""

    weights: tuple[float, ...]
    ridge: float

    def predict_raw(self, features: Sequence[float]) -> float:
        if len(features) + 1 != len(self.weights):
            raise ValueError(f"expected {len(self.weights) - 1} features, got {len(features)}")
        return self.weights[0] + float(np.dot(self.weights[1:], features))


def lr_features(src: str, parse: DepParse, table: RankTable) -> list[float]:
    tokens = tokenize(src)
    content = [t for t in tokens if any(ch.isalnum() for ch in t)] or tokens
    mean_log_rank = float(np.mean([np.log(table.rank(t)) for t in content]))
    return [float(len(src)), float(len(tokens)), mean_log_rank, float(parse.depth())]


def fit_lr_predictor(
    training_pairs: Sequence[SentencePair],
    parses: Mapping[str, DepParse],
    table: RankTable,
    ridge: float = 0.0,
) -> LrPredictor:
    """Closed-form ridge regression (intercept unpenalized) of the oracle
    length ratio on source-side features.  Multi-reference pairs use the
    mean ratio over their references."""
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    n_weights = len(LR_FEATURE_NAMES)
    if len(training_pairs) < n_weights:
        raise ValueError(
            f"need at least {n_weights} training pairs for {n_weights} weights, "
            f"got {len(training_pairs)}"
        )
    rows = []
    targets = []
    for pair in training_pairs:
        parse = parses.get(pair.id)
        if parse is None:
            raise ValueError(f"missing parse for sentence {pair.id!r}")
        if not pair.refs:
            raise ValueError(f"pair {pair.id!r} has no references to derive a target from")
        rows.append([1.0] + lr_features(pair.src, parse, table))
        targets.append(sum(len(r) for r in pair.refs) / (len(pair.refs) * len(pair.src)))
    x = np.asarray(rows, dtype=float)
    y = np.asarray(targets, dtype=float)
    penalty = np.eye(n_weights)
    penalty[0, 0] = 0.0
    normal = x.T @ x + ridge * penalty
    if ridge == 0.0 and np.linalg.matrix_rank(x) < n_weights:
        raise ValueError("singular system with ridge = 0; use a positive ridge")
    try:
        weights = np.linalg.solve(normal, x.T @ y)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular system with ridge = 0; use a positive ridge") from exc
    return LrPredictor(weights=tuple(float(w) for w in weights), ridge=ridge)


def predict_lr(pred: LrPredictor, src: str, parse: DepParse, table: RankTable) -> float:
    """Quantized per-sentence LR prediction (always a valid token value)."""
    return quantize(pred.predict_raw(lr_features(src, parse, table)))


def constant_lr_policy(value: float) -> Callable[[SentencePair], float]:
    quantized = quantize(value)
    return lambda pair: quantized


def predictor_lr_policy(
    pred: LrPredictor, parses: Mapping[str, DepParse], table: RankTable
) -> Callable[[SentencePair], float]:
    def policy(pair: SentencePair) -> float:
        parse = parses.get(pair.id)
        if parse is None:
            raise ValueError(f"missing parse for sentence {pair.id!r}")
        return predict_lr(pred, pair.src, parse, table)

    return policy


def apply_best(
    best: CtVector,
    pred: LrPredictor,
    test_pairs: Sequence[SentencePair],
    parses: Mapping[str, DepParse],
    table: RankTable,
) -> list[str]:
    """Annotate test sources with the static optimum plus per-sentence LR."""
    for name in ("dtd", "wr", "lv"):
        if not is_quantized(getattr(best, name)):
            raise ValueError(f"static value for {name} is not quantized")
    annotated = []
    for pair in test_pairs:
        parse = parses.get(pair.id)
        if parse is None:
            raise ValueError(f"missing parse for sentence {pair.id!r}")
        lr = predict_lr(pred, pair.src, parse, table)
        annotated.append(annotate(pair.src, CtVector(dtd=best.dtd, wr=best.wr, lv=best.lv, lr=lr)))
    return annotated
