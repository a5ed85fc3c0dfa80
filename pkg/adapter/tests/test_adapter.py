import io
import json
import subprocess
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest
from click.testing import CliRunner

from wsd_adapter.annotate import (
    annotate_with_model,
    annotate_with_rules,
    read_parallel_tsv,
    tag_with_rules,
    tokenize,
    write_records,
)
from wsd_adapter.cli import main
from wsd_adapter.lexicon import LexiconError, load_lexicon

FIXTURES = Path(__file__).parent / "fixtures"

# hand annotation of sentences.tsv: sentence number -> {lemma: sense}
HAND_ANNOTATION = {
    1: {"bank": "bank.fin"},
    2: {"bank": "bank.river"},
    3: {"bank": "bank.river"},
    4: {"bank": "bank.fin"},
    5: {"bass": "bass.music"},
    6: {"bass": "bass.fish"},
    7: {"bass": "bass.music"},
    8: {"bass": "bass.fish"},
    9: {"bank": "bank.fin"},
    10: {"bank": "bank.river"},
    11: {},
    12: {},
    13: {"bass": "bass.fish", "bank": "bank.fin"},
    14: {"bank": "bank.fin"},
    15: {"bank": "bank.river"},
    16: {"bass": "bass.music"},
    17: {"bank": "bank.river"},
    18: {"bass": "bass.fish"},
    19: {"bank": "bank.fin"},
    20: {"bass": "bass.music"},
}


def annotate_fixture(out_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "--input", str(FIXTURES / "sentences.tsv"),
            "--lexicon", str(FIXTURES / "lexicon.json"),
            "--out", str(out_path),
        ],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    return result


def test_fixture_matches_hand_annotation(tmp_path):
    out = tmp_path / "corpus.jsonl"
    annotate_fixture(out)
    records = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    assert len(records) == 20
    for i, record in enumerate(records, 1):
        assert record["id"] == f"s{i}"
        tagged = {
            t["lemma"]: t["sense"] for t in record["tokens"] if "sense" in t
        }
        assert tagged == HAND_ANNOTATION[i], record["id"]


def test_fixture_matches_golden_file(tmp_path):
    out = tmp_path / "corpus.jsonl"
    annotate_fixture(out)
    assert out.read_bytes() == (FIXTURES / "golden.jsonl").read_bytes()


def test_deterministic_across_runs(tmp_path):
    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    annotate_fixture(first)
    annotate_fixture(second)
    assert first.read_bytes() == second.read_bytes()


def test_output_validates_with_zero_diagnostics(tmp_path):
    """Conformance with the consuming toolkit, checked through its CLI."""
    out = tmp_path / "corpus.jsonl"
    annotate_fixture(out)
    result = subprocess.run(
        ["sensemt", "validate", "--corpus", str(out), "--format", "json"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stdout + result.stderr
    report = json.loads(result.stdout)
    assert report["sentences"] == 20
    assert report["diagnostics"] == 0


def test_empty_input_empty_output(tmp_path):
    src = tmp_path / "empty.tsv"
    src.write_text("", encoding="utf-8")
    out = tmp_path / "out.jsonl"
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["--input", str(src), "--lexicon", str(FIXTURES / "lexicon.json"),
         "--out", str(out)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    assert out.read_bytes() == b""


def test_sentence_without_lexicon_lemma_has_no_senses():
    lexicon = load_lexicon(FIXTURES / "lexicon.json")
    tokens = tag_with_rules("Nothing ambiguous here.", lexicon)
    assert all("sense" not in t for t in tokens)


def test_tokenize_spans_and_punctuation():
    text = "A bass, a bank."
    tokens = tokenize(text)
    assert [t[0] for t in tokens] == ["A", "bass", ",", "a", "bank", "."]
    previous_end = 0
    for surface, start, end in tokens:
        assert text[start:end] == surface
        assert start >= previous_end
        previous_end = end


def test_rule_order_first_match_wins():
    lexicon = load_lexicon(FIXTURES / "lexicon.json")
    # both a river trigger and a fin trigger present: river rule is first
    tokens = tag_with_rules("the bank by the river approved a loan", lexicon)
    senses = [t["sense"] for t in tokens if "sense" in t]
    assert senses == ["bank.river"]


def test_malformed_tsv_lines_reported():
    stream = io.StringIO("good source\tgood target\nno tab here\n\t\n")
    pairs, diagnostics = read_parallel_tsv(stream)
    assert pairs == [("good source", "good target")]
    assert [d.line for d in diagnostics] == [2, 3]


def test_lexicon_rejects_uppercase_trigger(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(
        json.dumps({"bank": {"default": "b.f", "rules": [[["River"], "b.r"]]}}),
        encoding="utf-8",
    )
    with pytest.raises(LexiconError, match="lowercase"):
        load_lexicon(bad)


def test_lexicon_requires_default(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bank": {"rules": []}}), encoding="utf-8")
    with pytest.raises(LexiconError, match="default"):
        load_lexicon(bad)


# --- external model backend ---------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    behavior = "ok"

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if self.behavior == "fail":
            self.send_response(500)
            self.end_headers()
            return
        annotations = []
        for sentence in body["sentences"]:
            tags = []
            for surface, start, end in tokenize(sentence):
                if surface.lower() == "bank":
                    tags.append(
                        {"lemma": "bank", "sense": "bank.model", "start": start, "end": end}
                    )
            if self.behavior == "misaligned":
                tags.append({"lemma": "x", "sense": "x.s", "start": 1, "end": 2})
            annotations.append(tags)
        payload = json.dumps({"annotations": annotations}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def model_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/"
    server.shutdown()


def test_model_backend_tags_aligned_spans(model_server):
    _Handler.behavior = "ok"
    records, diagnostics = annotate_with_model(
        [("the bank is open", "el banco está abierto")], model_server, "en", "es"
    )
    assert diagnostics == []
    senses = [t.get("sense") for t in records[0]["tokens"]]
    assert senses == [None, "bank.model", None, None]


def test_model_backend_failure_degrades_to_untagged(model_server):
    _Handler.behavior = "fail"
    records, diagnostics = annotate_with_model(
        [("the bank is open", "el banco está abierto")], model_server, "en", "es"
    )
    assert len(records) == 1
    assert all("sense" not in t for t in records[0]["tokens"])
    assert diagnostics and "backend failure" in diagnostics[0].message


def test_model_backend_drops_unalignable_span(model_server):
    _Handler.behavior = "misaligned"
    records, diagnostics = annotate_with_model(
        [("the bank is open", "el banco está abierto")], model_server, "en", "es"
    )
    assert [t.get("sense") for t in records[0]["tokens"]].count("bank.model") == 1
    assert any("unalignable" in d.message for d in diagnostics)


def test_write_records_round_trip(tmp_path):
    records = [{"id": "s1", "text": "hola", "tokens": [], "target": "hi",
                "src_lang": "es", "tgt_lang": "en"}]
    out = tmp_path / "out.jsonl"
    write_records(records, out)
    assert [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()] == records


def test_rule_backend_is_pure():
    lexicon = load_lexicon(FIXTURES / "lexicon.json")
    pairs = [("the muddy bank", "la orilla embarrada")]
    assert annotate_with_rules(pairs, lexicon, "en", "es") == annotate_with_rules(
        pairs, lexicon, "en", "es"
    )
