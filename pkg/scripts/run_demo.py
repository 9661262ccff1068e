#!/usr/bin/env python3
"""End-to-end demo on a synthetic mini corpus.

Builds a small PLABA-shaped pairs file plus the parse/frequency sidecars,
then drives the full pipeline through the CLI: ingest -> split -> control
tokens -> grid search (mock generator) -> evaluation -> model selection ->
human-eval sampling and assignment.  Everything lands in ./demo_workdir.

    python3 scripts/run_demo.py
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from simpeval.cli import main  # noqa: E402
from simpeval.corpus import ref_parse_id  # noqa: E402

VOCAB = [
    "patients", "treatment", "reduced", "symptoms", "study", "showed",
    "significant", "improvement", "therapy", "group", "levels", "compared",
]


def conllu_block(sent_id, tokens):
    lines = [f"# sent_id = {sent_id}"]
    for i, form in enumerate(tokens, start=1):
        lines.append(f"{i}\t{form}\t_\t_\t_\t_\t{i - 1}\t_\t_\t_")
    return "\n".join(lines) + "\n"


def build_corpus(workdir: Path, n_docs=12, pairs_per_doc=6, seed=0):
    rng = random.Random(seed)
    pairs, blocks = [], []
    for d in range(n_docs):
        for s in range(pairs_per_doc):
            pid = f"d{d}s{s}"
            words = rng.sample(VOCAB, rng.randint(4, 7))
            src = " ".join(words) + " ."
            ref = " ".join(words[: max(2, len(words) - 2)]) + " ."
            n_refs = 2 if rng.random() < 0.5 else 1
            if rng.random() < 0.04:
                refs = []  # an occasional 1-to-0 pair
            else:
                refs = [ref] * n_refs
            pairs.append({"id": pid, "doc_id": f"d{d}", "src": src, "refs": refs})
            blocks.append(conllu_block(pid, src.split()))
            for j, r in enumerate(refs):
                blocks.append(conllu_block(ref_parse_id(pid, j), r.split()))
    (workdir / "pairs.jsonl").write_text(
        "".join(json.dumps(p) + "\n" for p in pairs), encoding="utf-8"
    )
    (workdir / "parses.conllu").write_text("\n".join(blocks), encoding="utf-8")
    (workdir / "freq.txt").write_text("".join(w + "\n" for w in VOCAB), encoding="utf-8")
    return pairs


def write_predictions(split_path: Path, out_path: Path, degrade=0):
    """Fake system outputs: copy a reference, optionally dropping words."""
    lines = []
    for line in split_path.read_text(encoding="utf-8").splitlines():
        record = json.loads(line)
        hyp = record["refs"][0]
        if degrade:
            hyp = " ".join(hyp.split()[degrade:]) or hyp
        lines.append(json.dumps({"id": record["id"], "hyp": hyp}))
    out_path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")


def step(argv):
    print(f"\n$ simpeval {' '.join(argv)}")
    main(argv)


if __name__ == "__main__":
    workdir = Path("demo_workdir")
    workdir.mkdir(exist_ok=True)
    build_corpus(workdir)

    step(["ingest", "--pairs", str(workdir / "pairs.jsonl")])
    step([
        "split",
        "--pairs", str(workdir / "pairs.jsonl"),
        "--ratios", "0.8,0.1,0.1",
        "--seed", "1",
        "--out-dir", str(workdir / "splits"),
    ])
    step([
        "ct", "compute",
        "--pairs", str(workdir / "splits" / "train.jsonl"),
        "--parses", str(workdir / "parses.conllu"),
        "--freq", str(workdir / "freq.txt"),
        "--out", str(workdir / "ct.jsonl"),
    ])
    step([
        "ct", "prepare-train",
        "--pairs", str(workdir / "splits" / "train.jsonl"),
        "--parses", str(workdir / "parses.conllu"),
        "--freq", str(workdir / "freq.txt"),
        "--out", str(workdir / "train_examples.jsonl"),
    ])
    step([
        "ct", "optimize",
        "--generator", "mock",
        "--pairs", str(workdir / "splits" / "validation.jsonl"),
        "--parses", str(workdir / "parses.conllu"),
        "--freq", str(workdir / "freq.txt"),
        "--grid-dtd", "0.6,0.8,1.0",
        "--grid-wr", "0.8,1.0",
        "--grid-lv", "0.8,1.0",
        "--lr", "const:1.0",
        "--report", str(workdir / "search.json"),
    ])

    write_predictions(workdir / "splits" / "test.jsonl", workdir / "sys_copy.jsonl")
    write_predictions(workdir / "splits" / "test.jsonl", workdir / "sys_trunc.jsonl", degrade=1)
    for name in ("sys_copy", "sys_trunc"):
        step([
            "evaluate",
            "--predictions", str(workdir / f"{name}.jsonl"),
            "--pairs", str(workdir / "splits" / "test.jsonl"),
            "--system", name,
            "--out", str(workdir / f"report_{name}.json"),
        ])
    step([
        "select",
        "--reports", str(workdir / "report_sys_copy.json"), str(workdir / "report_sys_trunc.json"),
    ])
    step([
        "humeval", "sample",
        "--pairs", str(workdir / "splits" / "test.jsonl"),
        "--outputs", f"sys_copy={workdir / 'sys_copy.jsonl'}", f"sys_trunc={workdir / 'sys_trunc.jsonl'}",
        "--n", "4",
        "--seed", "2",
        "--out", str(workdir / "items.jsonl"),
    ])
    step([
        "humeval", "assign",
        "--items", str(workdir / "items.jsonl"),
        "--annotators", "0,1,2,3",
        "--schedule", "0-1,0-2,1-3,2-3",
        "--seed", "3",
        "--out", str(workdir / "plan.json"),
    ])
    print(
        "\nDemo artifacts are in ./demo_workdir. Start the annotation service with:\n"
        f"  python3 -m simpeval humeval serve --items {workdir / 'items.jsonl'} "
        f"--plan {workdir / 'plan.json'} --store {workdir / 'ratings.jsonl'} "
        "--bind 127.0.0.1:8712"
    )
