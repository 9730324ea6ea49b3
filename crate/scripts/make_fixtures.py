#!/usr/bin/env python3
"""Generate the deterministic demo/test fixtures under crates/core/tests/fixtures/.

The corpus is a tiny synthetic restaurant-review grammar: each sentence
carries one aspect term and one sentiment cue word that decides the label.
Parses follow the templates below. Rerunning the script reproduces the files
byte for byte.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "fixtures"

ASPECTS = ["food", "service", "menu", "staff"]
CUES = {
    "negative": ["awful", "stale", "rude", "bland"],
    "neutral": ["ordinary", "plain", "average", "typical"],
    "positive": ["great", "fresh", "friendly", "tasty"],
}

# template: tokens with {a} aspect and {c} cue slots, aspect position (1-based),
# heads (1-based, 0 = root), relations
TEMPLATES = [
    (
        ["the", "{a}", "was", "very", "{c}"],
        2,
        [2, 3, 0, 5, 3],
        ["det", "nsubj", "root", "advmod", "acomp"],
    ),
    (
        ["{a}", "seemed", "{c}", "overall"],
        1,
        [2, 0, 2, 2],
        ["nsubj", "root", "acomp", "advmod"],
    ),
    (
        ["i", "found", "the", "{a}", "quite", "{c}"],
        4,
        [2, 0, 4, 2, 6, 2],
        ["nsubj", "root", "det", "dobj", "advmod", "xcomp"],
    ),
]


def make_example(rng):
    label = rng.choice(sorted(CUES))
    cue = rng.choice(CUES[label])
    aspect = rng.choice(ASPECTS)
    tokens, aspect_pos, heads, rels = TEMPLATES[rng.randrange(len(TEMPLATES))]
    tokens = [t.replace("{a}", aspect).replace("{c}", cue) for t in tokens]
    record = {
        "tokens": tokens,
        "aspect_start": aspect_pos,
        "aspect_len": 1,
        "label": label,
    }
    return record, heads, rels


def write_split(name, count, rng):
    records, blocks = [], []
    labels = []
    for _ in range(count):
        record, heads, rels = make_example(rng)
        records.append(record)
        labels.append(record["label"])
        lines = []
        for i, (tok, head, rel) in enumerate(zip(record["tokens"], heads, rels)):
            lines.append(f"{i + 1}\t{tok}\t_\t_\t_\t_\t{head}\t{rel}\t_\t_")
        blocks.append("\n".join(lines))
    # make sure every class shows up in the split
    for cls in CUES:
        assert cls in labels, f"{name}: class {cls} missing"
    (OUT / f"{name}.jsonl").write_text(
        "".join(json.dumps(r, separators=(", ", ": ")) + "\n" for r in records)
    )
    (OUT / f"{name}.conllu").write_text("\n\n".join(blocks) + "\n")
    return records


def write_glove(records, dim, rng):
    vocab = sorted({t for r in records for t in r["tokens"]})
    lines = []
    for i, token in enumerate(vocab):
        # leave every fourth token out of the file to exercise random init
        if i % 4 == 3:
            continue
        values = " ".join(f"{rng.uniform(-0.5, 0.5):.4f}" for _ in range(dim))
        lines.append(f"{token} {values}")
    (OUT / "glove.txt").write_text("\n".join(lines) + "\n")


CONFIG = """\
# demo configuration: small widths so the fixture runs stay fast
d_w = 16
d_h = 16
gcn_layers = 2
transformer_blocks = 1
heads = 2
ffn_width = 32
dropout = 0.0
learning_rate = 0.001
batch_size = 8
max_epochs = 200
lambda = 0.00001
seed = 7
"""


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(7)
    train = write_split("train", 32, rng)
    test = write_split("test", 8, rng)
    write_glove(train + test, 16, rng)
    (OUT / "demo.config").write_text(CONFIG)
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
