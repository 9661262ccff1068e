"""The four control-token attributes and their rendering.

Each attribute compares a target sentence against its source:

  DTD  dependency-tree depth ratio        (syntactic complexity)
  WR   word-rank ratio over log ranks     (lexical complexity)
  LV   replace-only Levenshtein similarity (inverse character similarity)
  LR   character length ratio

Raw values are quantized onto the 0.05 grid [0.05, 2.00] before being
rendered as ``<DEPENDENCYTREEDEPTH_x> <WORDRANK_x> <REPLACEONLYLEVENSHTEIN_x>
<LENGTHRATIO_x>`` prefixes for a conditioned generator.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import DepParse, RankTable, SentencePair, ref_parse_id, tokenize

GRID_MIN_STEPS = 1
GRID_MAX_STEPS = 40
_STEPS_PER_UNIT = 20  # 1 / 0.05

#: Every legal quantized value, smallest to largest.  Values are computed by
#: division so they are bit-identical to their parsed decimal renderings.
QUANTIZED_VALUES: tuple[float, ...] = tuple(
    k / _STEPS_PER_UNIT for k in range(GRID_MIN_STEPS, GRID_MAX_STEPS + 1)
)

TOKEN_NAMES = ("DEPENDENCYTREEDEPTH", "WORDRANK", "REPLACEONLYLEVENSHTEIN", "LENGTHRATIO")


@dataclass(frozen=True)
class CtVector:
    """The four control-token values, in their fixed rendering order."""

    dtd: float
    wr: float
    lv: float
    lr: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.dtd, self.wr, self.lv, self.lr)

    def is_quantized(self) -> bool:
        return all(is_quantized(v) for v in self.as_tuple())


def quantize(value: float) -> float:
    """Round to the nearest 0.05 (ties away from zero), clamped to [0.05, 2.00].

    Non-finite input clamps to the nearer bound; NaN is rejected.
    """
    if math.isnan(value):
        raise ValueError("cannot quantize NaN")
    if math.isinf(value):
        steps = GRID_MAX_STEPS if value > 0 else GRID_MIN_STEPS
        return steps / _STEPS_PER_UNIT
    steps = int(math.floor(abs(value) * _STEPS_PER_UNIT + 0.5))
    if value < 0:
        steps = -steps
    steps = min(max(steps, GRID_MIN_STEPS), GRID_MAX_STEPS)
    return steps / _STEPS_PER_UNIT


def is_quantized(value: float) -> bool:
    if not math.isfinite(value):
        return False
    steps = round(value * _STEPS_PER_UNIT)
    return (
        GRID_MIN_STEPS <= steps <= GRID_MAX_STEPS
        and abs(value - steps / _STEPS_PER_UNIT) <= 1e-12
    )


def quantize_vector(ct: CtVector) -> CtVector:
    return CtVector(*(quantize(v) for v in ct.as_tuple()))


def format_value(value: float) -> str:
    """Minimal-decimal rendering of a quantized value: 1, 0.8, 0.75."""
    if not is_quantized(value):
        raise ValueError(f"{value!r} is not on the quantized grid")
    steps = round(value * _STEPS_PER_UNIT)
    if steps % 20 == 0:
        return str(steps // 20)
    if steps % 2 == 0:
        return f"{steps / _STEPS_PER_UNIT:.1f}"
    return f"{steps / _STEPS_PER_UNIT:.2f}"


def annotate(src: str, ct: CtVector) -> str:
    """Prefix ``src`` with the four control tokens; ``ct`` must be quantized."""
    if not ct.is_quantized():
        raise ValueError(f"control-token vector {ct} is not quantized")
    prefix = " ".join(
        f"<{name}_{format_value(v)}>" for name, v in zip(TOKEN_NAMES, ct.as_tuple())
    )
    return f"{prefix} {src}"


_ANNOTATION_RE = re.compile(
    r"^<DEPENDENCYTREEDEPTH_([^>]+)> <WORDRANK_([^>]+)> "
    r"<REPLACEONLYLEVENSHTEIN_([^>]+)> <LENGTHRATIO_([^>]+)> "
)


def parse_annotation(text: str) -> tuple[CtVector, str]:
    """Split an annotated string back into its vector and the verbatim source."""
    match = _ANNOTATION_RE.match(text)
    if match is None:
        raise ValueError("text does not start with the four control tokens")
    values = tuple(float(g) for g in match.groups())
    return CtVector(*values), text[match.end():]


def strip_annotation(text: str) -> str:
    return parse_annotation(text)[1]


def dep_tree_depth_ratio(src_parse: DepParse, tgt_parse: DepParse) -> float:
    """depth(tgt) / depth(src), depth counted in nodes on the deepest path."""
    return tgt_parse.depth() / src_parse.depth()


def _is_punctuation(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


def _quantile(sorted_values: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile of pre-sorted values."""
    if not sorted_values:
        raise ValueError("quantile of empty sequence")
    pos = q * (len(sorted_values) - 1)
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    if lo == hi:
        return sorted_values[lo]
    frac = pos - lo
    return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac


def lexical_complexity(tokens: Sequence[str], table: RankTable) -> float:
    """Third quartile of log frequency ranks, ignoring pure-punctuation tokens.

    Falls back to the full token list when everything is punctuation.
    """
    if not tokens:
        raise ValueError("cannot compute lexical complexity of an empty token list")
    content = [t for t in tokens if not _is_punctuation(t)] or list(tokens)
    logs = sorted(math.log(table.rank(t)) for t in content)
    return _quantile(logs, 0.75)


def word_rank_ratio(
    src_tokens: Sequence[str], tgt_tokens: Sequence[str], table: RankTable
) -> float:
    """complexity(tgt) / complexity(src) over log word ranks.

    A zero source complexity (every token rank 1) yields 1.0 when the target
    matches and +inf otherwise; quantize() clamps the latter to the grid top.
    """
    src_c = lexical_complexity(src_tokens, table)
    tgt_c = lexical_complexity(tgt_tokens, table)
    if src_c == 0.0:
        return 1.0 if tgt_c == 0.0 else math.inf
    return tgt_c / src_c


_MATCH, _SUBSTITUTE, _DELETE, _INSERT = range(4)


def _canonical_edit_ops(src: str, tgt: str) -> list[int]:
    """Backtrace of one minimal unit-cost edit script, preferring
    match > substitute > delete > insert at every step."""
    m, n = len(src), len(tgt)
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dist[i][0] = i
    for j in range(n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            same = src[i - 1] == tgt[j - 1]
            dist[i][j] = min(
                dist[i - 1][j - 1] + (0 if same else 1),
                dist[i - 1][j] + 1,
                dist[i][j - 1] + 1,
            )
    ops: list[int] = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and src[i - 1] == tgt[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            ops.append(_MATCH)
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and src[i - 1] != tgt[j - 1] and dist[i][j] == dist[i - 1][j - 1] + 1:
            ops.append(_SUBSTITUTE)
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append(_DELETE)
            i -= 1
        else:
            ops.append(_INSERT)
            j -= 1
    return ops


def replace_only_levenshtein(src: str, tgt: str) -> float:
    """1 - substitutions/max(|src|, |tgt|) over the canonical minimal edit script.

    Insertions and deletions are ignored, so pure expansion or truncation
    scores 1.0.  Different minimal scripts can disagree on the substitution
    count; the match > substitute > delete > insert backtrace preference
    makes the choice deterministic.
    """
    if not src:
        raise ValueError("src must be non-empty")
    substitutions = sum(1 for op in _canonical_edit_ops(src, tgt) if op == _SUBSTITUTE)
    return 1.0 - substitutions / max(len(src), len(tgt))


def length_ratio(src: str, tgt: str) -> float:
    """|tgt| / |src| in Unicode scalar values, spaces included."""
    if not src:
        raise ValueError("src must be non-empty")
    return len(tgt) / len(src)


def compute_ct(
    pair: SentencePair,
    ref_index: int,
    parses: Mapping[str, DepParse],
    table: RankTable,
) -> CtVector:
    """Raw (unquantized) oracle vector for one (source, reference) combination."""
    ref = pair.refs[ref_index]
    src_parse = parses.get(pair.id)
    if src_parse is None:
        raise ValueError(f"missing parse for sentence {pair.id!r}")
    ref_id = ref_parse_id(pair.id, ref_index)
    ref_parse = parses.get(ref_id)
    if ref_parse is None:
        raise ValueError(f"missing parse for sentence {ref_id!r}")
    return CtVector(
        dtd=dep_tree_depth_ratio(src_parse, ref_parse),
        wr=word_rank_ratio(tokenize(pair.src), tokenize(ref), table),
        lv=replace_only_levenshtein(pair.src, ref),
        lr=length_ratio(pair.src, ref),
    )


def prepare_training_set(
    pairs: Sequence[SentencePair],
    parses: Mapping[str, DepParse],
    table: RankTable,
) -> list[tuple[str, str]]:
    """One (annotated source, reference) training example per reference,
    annotated with the quantized oracle vector of that combination."""
    examples: list[tuple[str, str]] = []
    for pair in pairs:
        for j, ref in enumerate(pair.refs):
            ct = quantize_vector(compute_ct(pair, j, parses, table))
            examples.append((annotate(pair.src, ct), ref))
    return examples
