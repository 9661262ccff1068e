"""Corpus ingestion, tokenization, and the train/validation/test split protocol.

The toolkit consumes a sentence-aligned plain-language adaptation corpus
(PLABA-style): each record pairs one expert source sentence with zero or
more lay rewrites.  Sidecar resources produced offline (dependency parses,
a frequency lexicon, token embeddings) are loaded here too.

File formats (all UTF-8, LF line endings):
  * pairs:       JSON Lines, ``{"id", "doc_id", "src", "refs": [str, ...]}``
  * parses:      CoNLL-U with a mandatory ``# sent_id = <id>`` comment;
                 reference sentences use ids ``<pair_id>::ref<j>`` (0-based)
  * frequencies: plain text, one token per line, most frequent first
  * embeddings:  JSON Lines, ``{"id", "tokens": [...], "vecs": [[...], ...]}``
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence


class CorpusFormatError(ValueError):
    """Raised when an input file violates its documented format."""


@dataclass(frozen=True)
class SentencePair:
    """One source sentence with its (possibly empty) list of references."""

    id: str
    doc_id: str
    src: str
    refs: tuple[str, ...]

    def is_multi_ref(self) -> bool:
        return len(self.refs) >= 2


@dataclass(frozen=True)
class SplitSet:
    """Disjoint train/validation/test splits plus the parameters that made them."""

    train: tuple[SentencePair, ...]
    validation: tuple[SentencePair, ...]
    test: tuple[SentencePair, ...]
    seed: int
    ratios: tuple[float, float, float]

    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.validation), len(self.test))


@dataclass(frozen=True)
class DepParse:
    """A single-root dependency tree over the tokens of one sentence.

    ``heads[i]`` is the 0-based index of token i's head; the unique root
    token carries ``None`` instead.
    """

    sentence_id: str
    tokens: tuple[str, ...]
    heads: tuple[Optional[int], ...]

    def depth(self) -> int:
        """Number of nodes on the longest root-to-leaf path (single token -> 1)."""
        n = len(self.tokens)
        if n == 0:
            raise ValueError(f"parse {self.sentence_id!r} has no tokens")
        depths = [0] * n

        def node_depth(i: int) -> int:
            if depths[i]:
                return depths[i]
            head = self.heads[i]
            depths[i] = 1 if head is None else node_depth(head) + 1
            return depths[i]

        return max(node_depth(i) for i in range(n))


@dataclass(frozen=True)
class RankTable:
    """Frequency ranks (1 = most frequent); unknown tokens get ``default_rank``."""

    ranks: Mapping[str, int]
    default_rank: int

    def rank(self, token: str) -> int:
        return self.ranks.get(token, self.default_rank)

    def __len__(self) -> int:
        return len(self.ranks)


@dataclass(frozen=True)
class TokenEmbeddings:
    """Per-token real vectors for one sentence; all vectors share one dimension."""

    sentence_id: str
    tokens: tuple[str, ...]
    vectors: tuple[tuple[float, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.vectors[0]) if self.vectors else 0


_TOKEN_RE = re.compile(r"[^\W_]+|\S", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split ``text`` into alphanumeric runs and standalone
    punctuation/symbol characters.

    Deterministic by construction; empty input yields an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


def ref_parse_id(pair_id: str, ref_index: int) -> str:
    """Sidecar id under which reference ``ref_index`` of a pair is keyed."""
    return f"{pair_id}::ref{ref_index}"


def load_corpus(path: str) -> list[SentencePair]:
    """Read a JSON Lines pairs file.

    Pairs with empty ``refs`` (sentences the adaptation deleted entirely) are
    kept at this stage so raw corpus counts stay inspectable; they are removed
    by :func:`make_splits`.
    """
    pairs: list[SentencePair] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"{path}:{lineno}: expected an object per line")
            for key in ("id", "doc_id", "src", "refs"):
                if key not in record:
                    raise CorpusFormatError(f"{path}:{lineno}: missing field {key!r}")
            pair_id = record["id"]
            if not isinstance(pair_id, str) or not pair_id:
                raise CorpusFormatError(f"{path}:{lineno}: 'id' must be a non-empty string")
            if pair_id in seen:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate id {pair_id!r}")
            seen.add(pair_id)
            src = record["src"]
            if not isinstance(src, str) or not src:
                raise CorpusFormatError(f"{path}:{lineno}: 'src' must be a non-empty string")
            refs = record["refs"]
            if not isinstance(refs, list) or any(not isinstance(r, str) for r in refs):
                raise CorpusFormatError(f"{path}:{lineno}: 'refs' must be a list of strings")
            pairs.append(
                SentencePair(id=pair_id, doc_id=str(record["doc_id"]), src=src, refs=tuple(refs))
            )
    return pairs


def save_corpus(pairs: Sequence[SentencePair], path: str) -> None:
    """Write pairs in the canonical JSON Lines form read by :func:`load_corpus`.

    Canonical files round-trip bit-exactly through load/save.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            record = {"id": pair.id, "doc_id": pair.doc_id, "src": pair.src, "refs": list(pair.refs)}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def make_splits(
    pairs: Sequence[SentencePair],
    ratios: tuple[float, float, float],
    seed: int,
) -> SplitSet:
    """Split the corpus into train/validation/test.

    Procedure: drop pairs with no reference; shuffle at document level with
    ``seed`` (a document's pairs stay contiguous, so its multi-reference
    block lands in one split wherever quotas allow); fill the validation and
    test quotas exclusively with multi-reference pairs, in shuffled order;
    everything else goes to train.  Deterministic for a fixed seed.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    if any(r < 0 for r in ratios):
        raise ValueError(f"ratios must be non-negative, got {ratios}")
    filtered = [p for p in pairs if p.refs]
    if not filtered:
        raise ValueError("no pairs remain after removing empty-reference pairs")
    n = len(filtered)
    n_val = int(math.floor(n * ratios[1] + 0.5))
    n_test = int(math.floor(n * ratios[2] + 0.5))

    by_doc: dict[str, list[SentencePair]] = {}
    for pair in filtered:
        by_doc.setdefault(pair.doc_id, []).append(pair)
    doc_order = sorted(by_doc)
    random.Random(seed).shuffle(doc_order)
    ordered = [pair for doc in doc_order for pair in by_doc[doc]]

    multi = [p for p in ordered if p.is_multi_ref()]
    if len(multi) < n_val + n_test:
        raise ValueError(
            f"validation+test need {n_val + n_test} multi-reference pairs but only "
            f"{len(multi)} exist (shortfall {n_val + n_test - len(multi)})"
        )
    validation = multi[:n_val]
    test = multi[n_val : n_val + n_test]
    held_out = {p.id for p in validation} | {p.id for p in test}
    train = [p for p in ordered if p.id not in held_out]
    return SplitSet(
        train=tuple(train),
        validation=tuple(validation),
        test=tuple(test),
        seed=seed,
        ratios=tuple(ratios),
    )


def load_conllu(path: str) -> dict[str, DepParse]:
    """Read a CoNLL-U file into tree-validated parses keyed by ``sent_id``.

    Multiword-token ranges (``1-2``) and empty nodes (``1.1``) are skipped;
    only syntactic-word lines become nodes.
    """
    parses: dict[str, DepParse] = {}
    sent_id: Optional[str] = None
    forms: list[str] = []
    raw_heads: list[int] = []

    def flush(lineno: int) -> None:
        nonlocal sent_id, forms, raw_heads
        if not forms and sent_id is None:
            return
        if sent_id is None:
            raise CorpusFormatError(f"{path}:{lineno}: sentence block without '# sent_id =' comment")
        if not forms:
            raise CorpusFormatError(f"{path}: sentence {sent_id!r} has no token lines")
        parses[sent_id] = _build_parse(sent_id, forms, raw_heads)
        sent_id, forms, raw_heads = None, [], []

    with open(path, encoding="utf-8") as fh:
        lineno = 0
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush(lineno)
                continue
            if line.startswith("#"):
                if line.startswith("# sent_id"):
                    sent_id = line.split("=", 1)[1].strip()
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise CorpusFormatError(f"{path}:{lineno}: expected 10 tab-separated columns, got {len(cols)}")
            if "-" in cols[0] or "." in cols[0]:
                continue
            try:
                head = int(cols[6])
            except ValueError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: HEAD column is not an integer: {cols[6]!r}") from exc
            forms.append(cols[1])
            raw_heads.append(head)
        flush(lineno + 1)
    return parses


def _build_parse(sent_id: str, forms: list[str], raw_heads: list[int]) -> DepParse:
    n = len(forms)
    heads: list[Optional[int]] = []
    roots = 0
    for head in raw_heads:
        if head == 0:
            heads.append(None)
            roots += 1
        elif 1 <= head <= n:
            heads.append(head - 1)
        else:
            raise CorpusFormatError(f"sentence {sent_id!r}: head index {head} out of range 0..{n}")
    if roots != 1:
        raise CorpusFormatError(f"sentence {sent_id!r}: expected exactly one root, found {roots}")
    # Every non-root has one parent, so connectivity from the root <=> tree.
    children: dict[int, list[int]] = {}
    root = heads.index(None)
    for i, head in enumerate(heads):
        if head is not None:
            children.setdefault(head, []).append(i)
    stack, reached = [root], 0
    seen = [False] * n
    while stack:
        node = stack.pop()
        if seen[node]:
            continue
        seen[node] = True
        reached += 1
        stack.extend(children.get(node, ()))
    if reached != n:
        raise CorpusFormatError(f"sentence {sent_id!r}: head links contain a cycle")
    return DepParse(sentence_id=sent_id, tokens=tuple(forms), heads=tuple(heads))


def load_frequency_list(path: str) -> RankTable:
    """Read a descending-frequency token list; rank = 1-based line position.

    Out-of-vocabulary tokens rank one past the table (maximally rare).
    A token repeated later in the file keeps its first (best) rank.
    """
    ranks: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        position = 0
        for line in fh:
            token = line.strip()
            if not token:
                continue
            position += 1
            ranks.setdefault(token, position)
    if not ranks:
        raise CorpusFormatError(f"{path}: frequency list is empty")
    return RankTable(ranks=ranks, default_rank=position + 1)


def load_embeddings(path: str) -> dict[str, TokenEmbeddings]:
    """Read a token-embedding sidecar, enforcing one uniform vector dimension."""
    out: dict[str, TokenEmbeddings] = {}
    dim: Optional[int] = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            for key in ("id", "tokens", "vecs"):
                if key not in record:
                    raise CorpusFormatError(f"{path}:{lineno}: missing field {key!r}")
            rec_id = record["id"]
            if rec_id in out:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate id {rec_id!r}")
            tokens = record["tokens"]
            vecs = record["vecs"]
            if len(tokens) != len(vecs):
                raise CorpusFormatError(
                    f"{path}:{lineno}: {len(tokens)} tokens but {len(vecs)} vectors for id {rec_id!r}"
                )
            for vec in vecs:
                if dim is None:
                    dim = len(vec)
                    if dim == 0:
                        raise CorpusFormatError(f"{path}:{lineno}: zero-dimensional vector")
                if len(vec) != dim:
                    raise CorpusFormatError(
                        f"{path}:{lineno}: ragged vector dimensions ({len(vec)} != {dim}) for id {rec_id!r}"
                    )
            out[rec_id] = TokenEmbeddings(
                sentence_id=rec_id,
                tokens=tuple(tokens),
                vectors=tuple(tuple(float(x) for x in vec) for vec in vecs),
            )
    return out
