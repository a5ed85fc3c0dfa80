import io
import json

import pytest
from hypothesis import given, strategies as st

from sensemt import corpus
from sensemt.corpus import (
    parse_annotated_corpus,
    parse_eval_set,
    serialize_eval_item,
    serialize_pair,
    validate_corpus,
)

GOOD_LINE = json.dumps(
    {
        "id": "s1",
        "text": "I sat by the bank",
        "tokens": [
            {"surface": "bank", "lemma": "bank", "pos": "NOUN",
             "sense": "bn:R", "start": 13, "end": 17}
        ],
        "target": "Me senté junto a la orilla",
        "src_lang": "en",
        "tgt_lang": "es",
    }
)


def test_empty_stream():
    assert parse_annotated_corpus(io.StringIO("")) == ([], [])


def test_single_record_fields():
    pairs, diags = parse_annotated_corpus(io.StringIO(GOOD_LINE + "\n"))
    assert diags == []
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.source.id == "s1"
    assert pair.source.text == "I sat by the bank"
    assert pair.target == "Me senté junto a la orilla"
    assert pair.src_lang == "en" and pair.tgt_lang == "es"
    assert len(pair.source.tokens) == 1
    tok = pair.source.tokens[0]
    assert (tok.surface, tok.lemma, tok.pos, tok.sense) == ("bank", "bank", "NOUN", "bn:R")
    assert (tok.start, tok.end) == (13, 17)
    assert pair.source.sense_tokens() == [(0, tok)]


def test_span_beyond_text_rejected():
    bad = json.loads(GOOD_LINE)
    bad["tokens"][0]["end"] = 99
    pairs, diags = parse_annotated_corpus(io.StringIO(json.dumps(bad)))
    assert pairs == []
    assert len(diags) == 1 and diags[0].line == 1


def test_overlapping_spans_rejected():
    bad = json.loads(GOOD_LINE)
    bad["tokens"] = [
        {"surface": "sat", "lemma": "sat", "start": 2, "end": 5},
        {"surface": "at", "lemma": "at", "start": 3, "end": 5},
    ]
    _, diags = parse_annotated_corpus(io.StringIO(json.dumps(bad)))
    assert len(diags) == 1


def test_sense_without_lemma_rejected():
    bad = json.loads(GOOD_LINE)
    bad["tokens"][0]["lemma"] = ""
    _, diags = parse_annotated_corpus(io.StringIO(json.dumps(bad)))
    assert len(diags) == 1


def test_sense_with_whitespace_rejected():
    bad = json.loads(GOOD_LINE)
    bad["tokens"][0]["sense"] = "bn: R"
    _, diags = parse_annotated_corpus(io.StringIO(json.dumps(bad)))
    assert len(diags) == 1


def test_lemma_lowercased_on_ingest():
    rec = json.loads(GOOD_LINE)
    rec["tokens"][0]["lemma"] = "Bank"
    pairs, diags = parse_annotated_corpus(io.StringIO(json.dumps(rec)))
    assert diags == []
    assert pairs[0].source.tokens[0].lemma == "bank"


def test_duplicate_id_first_wins():
    second = json.loads(GOOD_LINE)
    second["target"] = "otra"
    stream = io.StringIO(GOOD_LINE + "\n" + json.dumps(second) + "\n")
    pairs, diags = parse_annotated_corpus(stream)
    assert len(pairs) == 1
    assert pairs[0].target == "Me senté junto a la orilla"
    assert len(diags) == 1 and "duplicate" in diags[0].message


def test_same_language_pair_rejected():
    bad = json.loads(GOOD_LINE)
    bad["tgt_lang"] = "en"
    _, diags = parse_annotated_corpus(io.StringIO(json.dumps(bad)))
    assert len(diags) == 1


def test_malformed_lines_never_abort():
    stream = io.StringIO("not json\n" + GOOD_LINE + "\n{\n")
    pairs, diags = parse_annotated_corpus(stream)
    assert len(pairs) == 1
    assert len(diags) == 2
    assert [d.line for d in diags] == [1, 3]


def test_byte_stream_with_invalid_utf8():
    stream = io.BytesIO(b"\xff\xfe\n" + GOOD_LINE.encode("utf-8") + b"\n")
    pairs, diags = parse_annotated_corpus(stream)
    assert len(pairs) == 1
    assert len(diags) == 1


def test_round_trip(c0):
    text = "".join(serialize_pair(p) + "\n" for p in c0)
    pairs, diags = parse_annotated_corpus(io.StringIO(text))
    assert diags == []
    assert pairs == c0


EVAL_LINE = json.dumps(
    {
        "id": "e1",
        "text": "The horse had a blaze between its eyes.",
        "tokens": [
            {"surface": "blaze", "lemma": "blaze", "sense": "bn:blaze-marking",
             "start": 16, "end": 21}
        ],
        "good": ["白线"],
        "bad": ["火焰"],
    },
    ensure_ascii=False,
)


def test_eval_empty_stream():
    assert parse_eval_set(io.StringIO("")) == ([], [])


def test_eval_blaze_item():
    items, diags = parse_eval_set(io.StringIO(EVAL_LINE))
    assert diags == []
    assert len(items) == 1
    item = items[0]
    assert item.good == frozenset({"白线"})
    assert item.bad == frozenset({"火焰"})
    pos, tok = item.sense_token
    assert tok.lemma == "blaze"


def test_eval_two_senses_rejected():
    bad = json.loads(EVAL_LINE)
    bad["tokens"].append(
        {"surface": "eyes", "lemma": "eye", "sense": "bn:eye", "start": 34, "end": 38}
    )
    items, diags = parse_eval_set(io.StringIO(json.dumps(bad)))
    assert items == []
    assert len(diags) == 1


def test_eval_good_bad_overlap_rejected():
    bad = json.loads(EVAL_LINE)
    bad["bad"] = bad["good"]
    items, diags = parse_eval_set(io.StringIO(json.dumps(bad)))
    assert items == []
    assert len(diags) == 1


def test_eval_round_trip():
    items, _ = parse_eval_set(io.StringIO(EVAL_LINE))
    again, diags = parse_eval_set(io.StringIO(serialize_eval_item(items[0])))
    assert diags == []
    assert again == items


def test_validate_empty():
    report = validate_corpus([])
    assert (report.sentences, report.tokens, report.sense_tokens) == (0, 0, 0)
    assert (report.distinct_lemmas, report.distinct_senses) == (0, 0)


def test_validate_c0(c0):
    report = validate_corpus(c0)
    assert report.sentences == 4
    assert report.sense_tokens == 4
    assert report.distinct_lemmas == 2
    assert report.distinct_senses == 3


def test_validate_no_senses():
    from conftest import make_pair

    report = validate_corpus([make_pair("p1", "hello there", [])])
    assert report.sentences == 1 and report.sense_tokens == 0


@given(st.binary(max_size=400))
def test_parser_total_over_arbitrary_bytes(data):
    stream = io.BytesIO(data)
    pairs, diags = parse_annotated_corpus(stream)
    for pair in pairs:
        assert pair.target
        for tok in pair.source.tokens:
            assert 0 <= tok.start < tok.end <= len(pair.source.text)


@given(
    st.lists(
        st.text(alphabet=st.characters(blacklist_characters="\n"), max_size=80),
        max_size=20,
    )
)
def test_every_nonblank_line_is_accounted_for(lines):
    payload = "".join(ln + "\n" for ln in lines)
    pairs, diags = parse_annotated_corpus(io.StringIO(payload))
    nonblank = sum(1 for ln in lines if ln.strip())
    assert len(pairs) + len(diags) == nonblank
