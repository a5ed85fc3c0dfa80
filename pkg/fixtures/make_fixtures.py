#!/usr/bin/env python3
"""Regenerates the conformance fixtures in this directory.

Run from the repo root: python3 fixtures/make_fixtures.py
"""

import json
from pathlib import Path

HERE = Path(__file__).parent

# word -> ordered [(sense, spanish form), ...]; first entry is the
# most-frequent-sense default used by the mock model
LEXICON = {
    "the": [["w:the", "el"]],
    "a": [["w:a", "un"]],
    "bank": [["bank.fin", "banco"], ["bank.river", "orilla"]],
    "bass": [["bass.music", "bajo"], ["bass.fish", "lubina"]],
    "river": [["w:river", "río"]],
    "was": [["w:was", "era"]],
    "big": [["w:big", "grande"]],
    "near": [["w:near", "cerca"]],
    "gave": [["w:gave", "dio"]],
    "me": [["w:me", "me"]],
    "loan": [["w:loan", "préstamo"]],
    "he": [["w:he", "él"]],
    "plays": [["w:plays", "toca"]],
    "ate": [["w:ate", "comió"]],
    "fish": [["w:fish", "pez"]],
    "music": [["w:music", "música"]],
    "deep": [["w:deep", "profundo"]],
    "of": [["w:of", "de"]],
}

FORMS = {word: dict(entries) for word, entries in LEXICON.items()}


def translate(text, senses):
    """Word-by-word reference translation using the annotated senses."""
    out = []
    for word in text.split():
        key = word.lower()
        if key in senses:
            out.append(FORMS[key][senses[key]])
        elif key in FORMS:
            out.append(next(iter(FORMS[key].values())))
        else:
            out.append(word)
    return " ".join(out)


def record(sid, text, senses):
    tokens = []
    cursor = 0
    for word in text.split():
        start = text.index(word, cursor)
        end = start + len(word)
        cursor = end
        tok = {"surface": word, "lemma": word.lower(), "start": start, "end": end}
        if word.lower() in senses:
            tok["sense"] = senses[word.lower()]
        tokens.append(tok)
    return {
        "id": sid,
        "text": text,
        "tokens": tokens,
        "target": translate(text, senses),
        "src_lang": "en",
        "tgt_lang": "es",
    }


CORPUS = [
    ("b1", "the bank of the river", {"bank": "bank.river"}),
    ("b2", "the bank was near", {"bank": "bank.river"}),
    ("b3", "a deep bank of the river", {"bank": "bank.river"}),
    ("b4", "the bank gave me a loan", {"bank": "bank.fin"}),
    ("b5", "the bank was big", {"bank": "bank.fin"}),
    ("b6", "a big bank gave a loan", {"bank": "bank.fin"}),
    ("b7", "he ate a bass", {"bass": "bass.fish"}),
    ("b8", "the bass was a big fish", {"bass": "bass.fish"}),
    ("b9", "he plays bass music", {"bass": "bass.music"}),
    ("b10", "the bass was deep music", {"bass": "bass.music"}),
]

QUERIES = [
    ("q1", "the bank was near me", {"bank": "bank.fin"}),
    ("q2", "he plays a bass", {"bass": "bass.music"}),
]

EVAL_ITEMS = [
    ("q1", {"good": ["banco"], "bad": ["orilla"]}),
    ("q2", {"good": ["bajo"], "bad": ["lubina"]}),
]


def main():
    with open(HERE / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for sid, text, senses in CORPUS:
            fh.write(json.dumps(record(sid, text, senses), ensure_ascii=False) + "\n")

    with open(HERE / "queries.jsonl", "w", encoding="utf-8") as fh:
        for sid, text, senses in QUERIES:
            fh.write(json.dumps(record(sid, text, senses), ensure_ascii=False) + "\n")

    with open(HERE / "eval.jsonl", "w", encoding="utf-8") as fh:
        for (sid, text, senses), (_, sets) in zip(QUERIES, EVAL_ITEMS):
            rec = record(sid, text, senses)
            del rec["target"], rec["src_lang"], rec["tgt_lang"]
            rec.update(sets)
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    (HERE / "mock_lexicon.json").write_text(
        json.dumps(LEXICON, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )

    metrics = [
        ("deepl", 63.91, 32.5, 53.79, 0.86),
        ("nllb", 61.33, 30.1, 52.10, 0.85),
        ("llm-a", 56.57, 27.2, 49.70, 0.83),
        ("llm-b", 53.64, 23.2, 46.20, 0.82),
        ("llm-c", 49.75, 23.9, 47.30, 0.83),
        ("nmt-small", 36.79, 18.4, 40.10, 0.74),
    ]
    with open(HERE / "metrics.csv", "w", encoding="utf-8") as fh:
        fh.write("system,accuracy,spbleu,chrfpp,comet22\n")
        for row in metrics:
            fh.write(",".join(str(v) for v in row) + "\n")


if __name__ == "__main__":
    main()
