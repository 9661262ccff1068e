import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from simpeval.control_tokens import CtVector, annotate, parse_annotation, strip_annotation
from simpeval.corpus import DepParse, RankTable, SentencePair, tokenize
from simpeval.ct_search import (
    CommandGenerator,
    CtGrid,
    HttpGenerator,
    LrPredictor,
    MockGenerator,
    apply_best,
    constant_lr_policy,
    fit_lr_predictor,
    grid_search,
    lr_features,
    predict_lr,
    predictor_lr_policy,
    run_generator,
)
from simpeval.metrics import corpus_sari

TABLE = RankTable(ranks={"alpha": 1, "beta": 2, "gamma": 3, "delta": 4}, default_rank=5)


def chain_parse(sent_id, tokens):
    heads = tuple(i - 1 if i else None for i in range(len(tokens)))
    return DepParse(sentence_id=sent_id, tokens=tuple(tokens), heads=heads)


def val_pairs():
    # References duplicated so the multi-reference precondition holds while
    # hyp == ref still scores SARI 100.
    rows = [
        ("v1", "alpha beta gamma delta", "alpha beta"),
        ("v2", "beta gamma delta alpha", "beta delta"),
        ("v3", "gamma delta alpha beta", "gamma alpha"),
    ]
    return [
        SentencePair(id=i, doc_id="d", src=src, refs=(ref, ref)) for i, src, ref in rows
    ]


def keyed_mock(pairs, key_dtd=0.8):
    by_src = {p.src: p.refs[0] for p in pairs}

    def fn(annotated):
        ct, src = parse_annotation(annotated)
        return by_src[src] if ct.dtd == key_dtd else src

    return MockGenerator(fn)


# -------------------------------------------------------------- grid search


def test_grid_search_single_point_equals_direct_evaluation():
    pairs = val_pairs()
    gen = keyed_mock(pairs)
    grid = CtGrid(dtd=(0.8,), wr=(1.0,), lv=(1.0,))
    result = grid_search(gen, pairs, grid, constant_lr_policy(1.0))
    annotated = [annotate(p.src, CtVector(0.8, 1.0, 1.0, 1.0)) for p in pairs]
    outputs = run_generator(gen, annotated)
    direct = corpus_sari(
        {p.id: p.src for p in pairs},
        {p.id: o for p, o in zip(pairs, outputs)},
        {p.id: list(p.refs) for p in pairs},
    )
    assert result.best_sari == pytest.approx(direct, abs=1e-12)
    assert (result.best.dtd, result.best.wr, result.best.lv) == (0.8, 1.0, 1.0)


def test_grid_search_finds_keyed_optimum_and_is_deterministic():
    pairs = val_pairs()
    gen = keyed_mock(pairs)
    grid = CtGrid(
        dtd=(0.6, 0.7, 0.8, 0.9, 1.0),
        wr=(0.2, 0.4, 0.6, 0.8, 1.0),
        lv=(0.2, 0.4, 0.6, 0.8, 1.0),
    )
    first = grid_search(gen, pairs, grid, constant_lr_policy(1.0))
    second = grid_search(gen, pairs, grid, constant_lr_policy(1.0))
    assert first.best.dtd == 0.8
    assert first.best_sari == pytest.approx(100.0, abs=1e-9)
    assert len(first.table) == 125
    assert first.table == second.table and first.best == second.best


def test_grid_search_tie_breaks_lexicographically():
    pairs = val_pairs()
    gen = MockGenerator(strip_annotation)  # constant behavior: every point ties
    grid = CtGrid(dtd=(1.0, 0.6), wr=(0.8, 0.4), lv=(0.9, 0.3))
    result = grid_search(gen, pairs, grid, constant_lr_policy(1.0))
    assert (result.best.dtd, result.best.wr, result.best.lv) == (0.6, 0.4, 0.3)


def test_grid_search_errors():
    pairs = val_pairs()
    with pytest.raises(ValueError, match="empty grid"):
        grid_search(MockGenerator(str), pairs, CtGrid(dtd=(), wr=(1.0,), lv=(1.0,)), 1.0)
    with pytest.raises(ValueError, match="not on the quantized grid"):
        grid_search(MockGenerator(str), pairs, CtGrid(dtd=(0.63,), wr=(1.0,), lv=(1.0,)), 1.0)

    class Broken:
        concurrent_safe = True

        def generate(self, inputs):
            return ["only one"]

    with pytest.raises(RuntimeError, match="returned 1 outputs"):
        grid_search(Broken(), pairs, CtGrid(dtd=(1.0,), wr=(1.0,), lv=(1.0,)), 1.0)

    single_ref = [SentencePair(id="x", doc_id="d", src="alpha beta", refs=("alpha",))]
    with pytest.raises(ValueError, match="not multi-reference"):
        grid_search(MockGenerator(str), single_ref, CtGrid(dtd=(1.0,), wr=(1.0,), lv=(1.0,)), 1.0)


# ---------------------------------------------------------------- bindings


def test_command_generator_round_trips_lines():
    gen = CommandGenerator(["cat"])
    assert gen.generate(["one line", "two line"]) == ["one line", "two line"]


def test_command_generator_nonzero_exit_is_error():
    gen = CommandGenerator(["sh", "-c", "exit 3"])
    with pytest.raises(RuntimeError, match="exited with 3"):
        gen.generate(["x"])


def test_http_generator_posts_inputs():
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            assert self.path == "/generate"
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            payload = json.dumps({"outputs": [s.upper() for s in body["inputs"]]}).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):
            pass

    server = HTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        gen = HttpGenerator(f"http://127.0.0.1:{server.server_address[1]}")
        assert gen.generate(["ab", "cd"]) == ["AB", "CD"]
    finally:
        server.shutdown()
        thread.join()


# ------------------------------------------------------------- LR predictor


VOCAB = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
VOCAB_TABLE = RankTable(ranks={w: i + 1 for i, w in enumerate(VOCAB)}, default_rank=7)


def planted_corpus():
    """Eight pairs whose oracle LR follows 0.9 - 0.002 * char_length exactly,
    with the other features varying independently."""
    token_counts = [1, 3, 2, 5, 4, 2, 6, 3]  # deliberately not affine in length
    desired_depths = [1, 3, 2, 4, 2, 2, 5, 3]
    pairs, parses = [], {}
    for i in range(8):
        length = 50 * (i + 1)
        n_tokens = token_counts[i]
        words = [VOCAB[(i + j) % len(VOCAB)] for j in range(n_tokens - 1)]
        pad = length - sum(len(w) for w in words) - (n_tokens - 1)
        assert pad >= 1
        src = " ".join(words + ["x" * pad])
        assert len(src) == length and len(tokenize(src)) == n_tokens
        ref_len = length * 9 // 10 - length * length // 500  # 0.9 L - 0.002 L^2, integral here
        pair = SentencePair(id=f"p{i}", doc_id="d", src=src, refs=("y" * ref_len,))
        pairs.append(pair)
        depth = min(desired_depths[i], n_tokens)
        heads = [j - 1 if 0 < j < depth else (None if j == 0 else 0) for j in range(n_tokens)]
        parses[pair.id] = DepParse(sentence_id=pair.id, tokens=tuple(tokenize(src)), heads=tuple(heads))
        assert parses[pair.id].depth() == depth
    return pairs, parses


def test_fit_recovers_planted_line():
    pairs, parses = planted_corpus()
    rows = np.asarray([[1.0] + lr_features(p.src, parses[p.id], VOCAB_TABLE) for p in pairs])
    assert np.linalg.matrix_rank(rows) == 5  # construction sanity: identifiable
    predictor = fit_lr_predictor(pairs, parses, VOCAB_TABLE, ridge=0.0)
    expected = (0.9, -0.002, 0.0, 0.0, 0.0)
    assert predictor.weights == pytest.approx(expected, abs=1e-6)


def test_fit_constant_targets_gives_intercept_only():
    pairs, parses = planted_corpus()
    constant = [
        SentencePair(id=p.id, doc_id=p.doc_id, src=p.src, refs=("z" * (len(p.src) * 7 // 10),))
        for p in pairs
    ]
    predictor = fit_lr_predictor(constant, parses, VOCAB_TABLE, ridge=0.5)
    assert predictor.weights[0] == pytest.approx(0.7, abs=1e-8)
    assert predictor.weights[1:] == pytest.approx((0.0, 0.0, 0.0, 0.0), abs=1e-8)


def test_fit_requires_enough_samples():
    pairs, parses = planted_corpus()
    with pytest.raises(ValueError, match="at least 5"):
        fit_lr_predictor(pairs[:4], parses, VOCAB_TABLE, ridge=0.0)


def test_fit_singular_without_ridge_advises_positive_ridge():
    base, parses = planted_corpus()
    clones = [
        SentencePair(id=f"c{i}", doc_id="d", src=base[0].src, refs=base[0].refs) for i in range(6)
    ]
    clone_parses = {p.id: parses[base[0].id] for p in clones}
    with pytest.raises(ValueError, match="positive ridge"):
        fit_lr_predictor(clones, clone_parses, VOCAB_TABLE, ridge=0.0)
    # the same data fits fine once regularized
    fit_lr_predictor(clones, clone_parses, VOCAB_TABLE, ridge=0.1)


def test_fit_loss_never_worse_than_zero_predictor():
    pairs, parses = planted_corpus()
    predictor = fit_lr_predictor(pairs, parses, VOCAB_TABLE, ridge=0.01)
    losses = {"fit": 0.0, "zero": 0.0}
    for pair in pairs:
        target = len(pair.refs[0]) / len(pair.src)
        features = lr_features(pair.src, parses[pair.id], VOCAB_TABLE)
        losses["fit"] += (predictor.predict_raw(features) - target) ** 2
        losses["zero"] += target**2
    assert losses["fit"] <= losses["zero"] + 1e-12


@pytest.mark.parametrize(
    "intercept,expected",
    [(0.7, 0.7), (0.63, 0.65), (-0.4, 0.05)],
)
def test_predict_lr_quantizes(intercept, expected):
    predictor = LrPredictor(weights=(intercept, 0.0, 0.0, 0.0, 0.0), ridge=0.0)
    parse = chain_parse("s", ["alpha"])
    assert predict_lr(predictor, "alpha", parse, VOCAB_TABLE) == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------- apply_best


def test_apply_best_static_shared_lr_varies():
    pairs, parses = planted_corpus()
    test_pairs = pairs[:3]
    predictor = LrPredictor(weights=(0.2, 0.002, 0.0, 0.0, 0.0), ridge=0.0)
    best = CtVector(dtd=0.8, wr=0.75, lv=0.7, lr=1.0)
    annotated = apply_best(best, predictor, test_pairs, parses, VOCAB_TABLE)
    assert len(annotated) == 3
    lrs = []
    for text, pair in zip(annotated, test_pairs):
        ct, src = parse_annotation(text)
        assert src == pair.src  # round trip
        assert (ct.dtd, ct.wr, ct.lv) == (0.8, 0.75, 0.7)
        lrs.append(ct.lr)
    assert len(set(lrs)) > 1


def test_apply_best_intercept_one_renders_bare_one():
    pairs, parses = planted_corpus()
    predictor = LrPredictor(weights=(1.0, 0.0, 0.0, 0.0, 0.0), ridge=0.0)
    best = CtVector(dtd=1.0, wr=1.0, lv=1.0, lr=1.0)
    annotated = apply_best(best, predictor, pairs[:2], parses, VOCAB_TABLE)
    for text in annotated:
        assert "<LENGTHRATIO_1>" in text


def test_apply_best_missing_parse_is_error():
    pairs, parses = planted_corpus()
    predictor = LrPredictor(weights=(1.0, 0.0, 0.0, 0.0, 0.0), ridge=0.0)
    del parses["p1"]
    with pytest.raises(ValueError, match="p1"):
        apply_best(CtVector(1.0, 1.0, 1.0, 1.0), predictor, pairs[:2], parses, VOCAB_TABLE)


def test_predictor_lr_policy_feeds_grid_search():
    pairs, parses = planted_corpus()
    multi = [
        SentencePair(id=p.id, doc_id=p.doc_id, src=p.src, refs=(p.refs[0], p.refs[0]))
        for p in pairs[:3]
    ]
    predictor = LrPredictor(weights=(0.5, 0.001, 0.0, 0.0, 0.0), ridge=0.0)
    policy = predictor_lr_policy(predictor, parses, VOCAB_TABLE)
    gen = MockGenerator(strip_annotation)
    result = grid_search(gen, multi, CtGrid(dtd=(1.0,), wr=(1.0,), lv=(1.0,)), policy)
    assert len(result.table) == 1
